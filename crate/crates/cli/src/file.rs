//! TOML problem files.

use std::path::{Path, PathBuf};

use coindeg::degree::SolverConfig;
use coindeg::exprfield::FieldExpr;
use coindeg::operators::GridSpec;
use coindeg::problem::{Diffusion, Problem};
use coindeg::setvalued::{Regularization, SetValuedField};
use coindeg::spectral::ReactionMatrices;
use nalgebra::DMatrix;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub grid: GridSection,
    #[serde(default)]
    pub diffusion: DiffusionSection,
    pub reaction: ReactionSection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub extents: Vec<f64>,
    pub nodes: Vec<usize>,
    #[serde(alias = "M")]
    pub components: usize,
}

/// One expression per component, or all of them in one string separated by
/// newlines or semicolons.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Exprs {
    One(String),
    Many(Vec<String>),
}

impl Exprs {
    fn parse(&self, arity: usize) -> Result<FieldExpr, String> {
        let parts: Vec<String> = match self {
            Exprs::One(s) => s.split([';', '\n']).map(str::trim).filter(|p| !p.is_empty()).map(String::from).collect(),
            Exprs::Many(v) => v.clone(),
        };
        FieldExpr::parse_components(&parts, arity).map_err(|e| e.to_string())
    }
}

/// A matrix as rows, or a bare number for `M = 1`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
}

impl MatrixSpec {
    fn build(&self, name: &str) -> Result<DMatrix<f64>, String> {
        match self {
            MatrixSpec::Scalar(x) => Ok(DMatrix::from_element(1, 1, *x)),
            MatrixSpec::Rows(rows) => {
                let r = rows.len();
                let c = rows.first().map_or(0, Vec::len);
                if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
                    return Err(format!("{name} must be a non-empty rectangular matrix"));
                }
                Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
            }
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionSection {
    /// `"identity"` or an expression for `ρ`.
    pub rho: Option<Exprs>,
    #[serde(rename = "R0")]
    pub r0: Option<MatrixSpec>,
    #[serde(rename = "Rinf")]
    pub rinf: Option<MatrixSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionSection {
    pub f: Option<Exprs>,
    pub phi_lower: Option<Exprs>,
    pub phi_upper: Option<Exprs>,
    #[serde(rename = "D0")]
    pub d0: MatrixSpec,
    #[serde(rename = "Dinf")]
    pub dinf: MatrixSpec,
    pub regularization: Option<Regularization>,
}

/// Probe boxes for the `oracle` command when no annulus radius is available.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub zero_radius: f64,
    pub infinity_radius: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            zero_radius: 1e-2,
            infinity_radius: 100.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub report: Option<PathBuf>,
    pub profile: Option<PathBuf>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub regularization: Option<Regularization>,
    pub selection: Option<coindeg::setvalued::Selection>,
}

/// A parsed file together with the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub file: ProblemFile,
    pub base: PathBuf,
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let file: ProblemFile = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { file, base })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn seed(&self, ov: &Overrides) -> u64 {
        ov.seed.unwrap_or(self.file.solver.seed)
    }

    pub fn regularization(&self, ov: &Overrides) -> Regularization {
        ov.regularization.or(self.file.reaction.regularization).unwrap_or_default()
    }

    pub fn grid(&self) -> Result<GridSpec, String> {
        let g = &self.file.grid;
        if g.extents.len() != g.dim || g.nodes.len() != g.dim {
            return Err(format!(
                "grid: dim = {} but {} extents and {} node counts",
                g.dim,
                g.extents.len(),
                g.nodes.len()
            ));
        }
        GridSpec::new(g.extents.clone(), g.nodes.clone(), g.components).map_err(|e| e.to_string())
    }

    /// The source field `f`, if the reaction is single-valued.
    pub fn source_field(&self) -> Result<Option<FieldExpr>, String> {
        let m = self.file.grid.components;
        self.file.reaction.f.as_ref().map(|f| f.parse(m).map_err(|e| format!("reaction.f: {e}"))).transpose()
    }

    pub fn reaction(&self, ov: &Overrides) -> Result<SetValuedField, String> {
        let m = self.file.grid.components;
        let r = &self.file.reaction;
        let field = match (&r.f, &r.phi_lower, &r.phi_upper) {
            (Some(_), None, None) => {
                let f = self.source_field()?.expect("checked above");
                SetValuedField::regularized(f, self.regularization(ov))
            }
            (None, Some(lo), Some(hi)) => SetValuedField::from_bounds(
                lo.parse(m).map_err(|e| format!("reaction.phi_lower: {e}"))?,
                hi.parse(m).map_err(|e| format!("reaction.phi_upper: {e}"))?,
            ),
            _ => return Err("reaction: give either f or both phi_lower and phi_upper".into()),
        };
        field.map_err(|e| e.to_string())
    }

    pub fn diffusion(&self) -> Result<Diffusion, String> {
        match &self.file.diffusion.rho {
            None => Ok(Diffusion::Identity),
            Some(Exprs::One(s)) if s.trim() == "identity" => Ok(Diffusion::Identity),
            Some(e) => e
                .parse(self.file.grid.components)
                .map(Diffusion::Nonlinear)
                .map_err(|e| format!("diffusion.rho: {e}")),
        }
    }

    pub fn matrices(&self) -> Result<ReactionMatrices, String> {
        let m = self.file.grid.components;
        let eye = || DMatrix::identity(m, m);
        let d = &self.file.diffusion;
        let r = &self.file.reaction;
        let r0 = d.r0.as_ref().map(|x| x.build("R0")).transpose()?.unwrap_or_else(eye);
        let rinf = d.rinf.as_ref().map(|x| x.build("Rinf")).transpose()?.unwrap_or_else(eye);
        let mats = ReactionMatrices {
            d0: r.d0.build("D0")?,
            dinf: r.dinf.build("Dinf")?,
            r0,
            rinf,
        };
        for (name, x) in [("D0", &mats.d0), ("Dinf", &mats.dinf), ("R0", &mats.r0), ("Rinf", &mats.rinf)] {
            if x.nrows() != m || x.ncols() != m {
                return Err(format!("{name} is {}x{}, grid has M = {m}", x.nrows(), x.ncols()));
            }
        }
        Ok(mats)
    }

    pub fn problem(&self, ov: &Overrides) -> Result<Problem, String> {
        let grid = self.grid()?;
        let mut p = Problem::new(grid, self.diffusion()?, self.reaction(ov)?, self.matrices()?).map_err(|e| e.to_string())?;
        p.seed = self.seed(ov);
        p.selection = ov.selection.unwrap_or(self.file.solver.selection);
        Ok(p)
    }

    pub fn solver(&self, ov: &Overrides) -> SolverConfig {
        let mut s = self.file.solver.clone();
        s.seed = self.seed(ov);
        if let Some(sel) = ov.selection {
            s.selection = sel;
        }
        s
    }
}
