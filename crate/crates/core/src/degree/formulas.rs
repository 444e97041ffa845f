//! Degree values from the closed-form rules.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use super::annulus::{infinity_radius, zero_radius, AnnulusConfig, RadiusBound};
use super::solver::{default_starts, multistart_solve, SolverConfig};
use crate::cones::{semi_inner_plus, ConstraintCone};
use crate::error::{Error, Result};
use crate::linalg::{norm2, norm_inf, sub};
use crate::operators::{DiscreteOperator, LinearAction};
use crate::par::{stream_rng, Execution};
use crate::setvalued::{BoxMap, BoxValue, FnBoxMap};
use crate::spectral::{effective_matrices, is_quasi_nonnegative, sigma_plus, spectral_abscissa, ReactionMatrices};

/// Distance below which `λ₁` counts as hitting a spectral set.
pub const EXCLUSION_MARGIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Linear,
    AtZero,
    AtInfinity,
    EigenRay,
    Normalization,
}

#[derive(Debug, Clone, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub detail: String,
}

impl Hypothesis {
    fn new(name: &str, passed: bool, margin: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            margin,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Window {
    /// `ball`, `annulus` or `cone`.
    pub kind: String,
    pub inner: Option<f64>,
    pub outer: Option<f64>,
    /// Norm the radii refer to.
    pub norm: String,
}

impl Window {
    fn ball(r: f64, norm: &str) -> Self {
        Self {
            kind: "ball".into(),
            inner: None,
            outer: Some(r),
            norm: norm.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeReport {
    pub value: Option<i64>,
    pub rule: Rule,
    pub hypotheses: Vec<Hypothesis>,
    pub window: Window,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<RadiusBound>,
}

impl DegreeReport {
    fn finish(rule: Rule, value: i64, hypotheses: Vec<Hypothesis>, window: Window, radius: Option<RadiusBound>) -> Self {
        let ok = hypotheses.iter().all(|h| h.passed);
        Self {
            value: ok.then_some(value),
            rule,
            hypotheses,
            window,
            radius,
        }
    }

    pub fn failed(&self) -> Vec<&str> {
        self.hypotheses.iter().filter(|h| !h.passed).map(|h| h.name.as_str()).collect()
    }
}

fn spectral_hypotheses(d: &DMatrix<f64>, lambda1: f64) -> Result<(Vec<Hypothesis>, f64)> {
    let qn = is_quasi_nonnegative(d);
    let min_off = (0..d.nrows())
        .flat_map(|i| (0..d.ncols()).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| d[(i, j)])
        .fold(f64::INFINITY, f64::min);
    let sp = sigma_plus(d)?;
    let gap = sp.iter().map(|s| (s - lambda1).abs()).fold(f64::INFINITY, f64::min);
    let s = spectral_abscissa(d)?;
    Ok((
        vec![
            Hypothesis::new(
                "quasi_nonnegative",
                qn,
                if min_off.is_finite() { min_off } else { 0.0 },
                "smallest off-diagonal entry",
            ),
            Hypothesis::new(
                "lambda1_not_in_sigma_plus",
                gap > EXCLUSION_MARGIN,
                gap,
                format!("λ₁ = {lambda1}, σ₊ = {sp:?}"),
            ),
            Hypothesis::new(
                "abscissa_separated",
                (s - lambda1).abs() > EXCLUSION_MARGIN,
                (s - lambda1).abs(),
                format!("s = {s}"),
            ),
        ],
        s,
    ))
}

/// Degree of the linear field `u ↦ D u` on a ball of the orthant: 1 below
/// `λ₁`, 0 above.
pub fn degree_linear(op: &DiscreteOperator, d: &DMatrix<f64>, ball_radius: f64) -> Result<DegreeReport> {
    check_square(d, op.components())?;
    let lambda1 = op.principal_eigenpair()?.lambda1;
    let (mut hyps, s) = spectral_hypotheses(d, lambda1)?;
    hyps.push(Hypothesis::new("positive_radius", ball_radius > 0.0, ball_radius, "ball radius"));
    Ok(DegreeReport::finish(
        Rule::Linear,
        (s < lambda1) as i64,
        hyps,
        Window::ball(ball_radius, "l2"),
        None,
    ))
}

fn check_square(d: &DMatrix<f64>, m: usize) -> Result<()> {
    if d.nrows() != m || d.ncols() != m {
        return Err(Error::Dimension {
            expected: m,
            got: d.nrows().max(d.ncols()),
        });
    }
    Ok(())
}

/// Linearization rule on the small ball: uses `G₀ = D₀R₀⁻¹`; `pointwise` is
/// the node map `w ↦ φ(γ(w))` whose remainder fixes the radius.
pub fn degree_at_zero(
    op: &DiscreteOperator,
    mats: &ReactionMatrices,
    pointwise: &dyn BoxMap,
    cfg: &AnnulusConfig,
) -> Result<DegreeReport> {
    let (g0, _) = effective_matrices(mats)?;
    check_square(&g0, op.components())?;
    let lambda1 = op.principal_eigenpair()?.lambda1;
    let (mut hyps, s) = spectral_hypotheses(&g0, lambda1)?;
    let mu = op.grid().dirichlet_eigenvalues();
    let r = zero_radius(pointwise, &g0, &mu, cfg)?;
    hyps.push(match &r {
        Some(b) => Hypothesis::new(
            "isolated_zero",
            true,
            b.kappa * cfg.zero_fraction - b.eta,
            format!("no nontrivial solution with all node values below {}", b.radius),
        ),
        None => Hypothesis::new("isolated_zero", false, 0.0, "no radius with sampled remainder below the gap"),
    });
    let window = Window::ball(r.as_ref().map_or(0.0, |b| b.radius), "node_sup");
    Ok(DegreeReport::finish(Rule::AtZero, (s < lambda1) as i64, hyps, window, r))
}

/// Linearization rule on the large ball, with `G∞ = D∞R∞⁻¹`.
pub fn degree_at_infinity(
    op: &DiscreteOperator,
    mats: &ReactionMatrices,
    pointwise: &dyn BoxMap,
    cfg: &AnnulusConfig,
) -> Result<DegreeReport> {
    let (_, ginf) = effective_matrices(mats)?;
    check_square(&ginf, op.components())?;
    let lambda1 = op.principal_eigenpair()?.lambda1;
    let (mut hyps, s) = spectral_hypotheses(&ginf, lambda1)?;
    let mu = op.grid().dirichlet_eigenvalues();
    let r = infinity_radius(pointwise, &ginf, &mu, op.nodes(), cfg)?;
    hyps.push(match &r {
        Some(b) => Hypothesis::new(
            "a_priori_bound",
            true,
            b.kappa - b.eta,
            format!("every solution has l2 norm at most {}", b.radius),
        ),
        None => Hypothesis::new("a_priori_bound", false, 0.0, "sampled remainder never drops below the gap"),
    });
    let window = Window::ball(r.as_ref().map_or(f64::INFINITY, |b| b.radius), "l2");
    Ok(DegreeReport::finish(Rule::AtInfinity, (s < lambda1) as i64, hyps, window, r))
}

/// Degree of `λI` on the whole cone.
pub fn degree_eigen_ray(op: &DiscreteOperator, lambda: f64) -> Result<DegreeReport> {
    let e1 = op.principal_eigenpair()?;
    let tol = EXCLUSION_MARGIN * e1.lambda1.max(1.0);
    if (lambda - e1.lambda1).abs() <= tol {
        return Err(Error::InvalidArgument(format!(
            "λ = {lambda} is within {tol:e} of λ₁ = {}",
            e1.lambda1
        )));
    }
    let phi_min = e1.phi.iter().copied().fold(f64::INFINITY, f64::min) / norm_inf(&e1.phi);
    let mut hyps = vec![Hypothesis::new(
        "phi_positive",
        phi_min > 0.0,
        phi_min,
        "smallest entry of the principal eigenvector (sup-normalized)",
    )];
    // the next eigenvector must leave the cone in both orientations
    if op.nodes() > 1 {
        let e2 = op.eigenpair_deflated(std::slice::from_ref(&e1.phi))?;
        let (lo, hi) = e2.phi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let peak = norm_inf(&e2.phi);
        let sc = (-lo).min(hi) / peak;
        hyps.push(Hypothesis::new(
            "second_eigenvector_changes_sign",
            sc > 1e-8,
            sc,
            format!("λ₂ = {}", e2.lambda1),
        ));
        hyps.push(Hypothesis::new(
            "eigen_gap",
            e2.lambda1 - e1.lambda1 > tol,
            e2.lambda1 - e1.lambda1,
            "λ₂ - λ₁",
        ));
    }
    hyps.push(Hypothesis::new(
        "lambda_separated",
        true,
        (lambda - e1.lambda1).abs(),
        format!("λ₁ = {}", e1.lambda1),
    ));
    Ok(DegreeReport::finish(
        Rule::EigenRay,
        (lambda < e1.lambda1) as i64,
        hyps,
        Window {
            kind: "cone".into(),
            inner: None,
            outer: None,
            norm: "l2".into(),
        },
        None,
    ))
}

/// Confinement evidence: solver runs for `tF` over the `t`-grid.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRun {
    pub t: f64,
    pub start_index: usize,
    pub sup_norm: f64,
    pub escaped: bool,
    pub converged: bool,
}

/// Normalization on a declared ball: the homotopy `tF`, `t ∈ [0, 1]`, keeps
/// all coincidence candidates inside `declared_radius` (sup norm), so the
/// degree equals that of `F ≡ 0`, which is 1.
pub fn degree_normalization(
    op: &DiscreteOperator,
    field: &dyn BoxMap,
    cfg: &SolverConfig,
    declared_radius: f64,
    t_grid: &[f64],
) -> Result<(DegreeReport, Vec<SweepRun>)> {
    let n = op.dim();
    if field.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: field.dim(),
        });
    }
    if t_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::InvalidArgument("t-grid must lie in [0, 1]".into()));
    }
    let eig = op.principal_eigenpair()?;
    let cone = ConstraintCone::orthant(n);
    let mut cfg = cfg.clone();
    cfg.escape_radius = Some(declared_radius);
    let starts: Vec<Vec<f64>> = default_starts(&eig, op.components(), &cfg)
        .into_iter()
        .filter(|s| norm_inf(s) <= declared_radius)
        .collect();
    let mut runs = Vec::new();
    let mut worst: Option<(f64, f64)> = None;
    for &t in t_grid {
        let scaled = FnBoxMap {
            dim: n,
            f: |u: &[f64]| -> Result<BoxValue> {
                let b = field.eval_box(u)?;
                Ok(BoxValue {
                    lo: b.lo.iter().map(|x| t * x).collect(),
                    hi: b.hi.iter().map(|x| t * x).collect(),
                })
            },
        };
        for rep in multistart_solve(op, &scaled, &cone, &cfg, eig.lambda1, &starts, Execution::Auto) {
            let rep = rep?;
            let out = rep.escaped || rep.sup_norm > declared_radius;
            if out && worst.is_none_or(|(_, s)| rep.sup_norm > s) {
                worst = Some((t, rep.sup_norm));
            }
            runs.push(SweepRun {
                t,
                start_index: rep.start_index,
                sup_norm: rep.sup_norm,
                escaped: out,
                converged: rep.converged,
            });
        }
    }
    let peak = runs.iter().map(|r| r.sup_norm).fold(0.0, f64::max);
    let hyp = match worst {
        None => Hypothesis::new(
            "sweep_confined",
            true,
            declared_radius - peak,
            format!("{} runs over {} values of t", runs.len(), t_grid.len()),
        ),
        Some((t, s)) => Hypothesis::new(
            "sweep_confined",
            false,
            declared_radius - s,
            format!("run at t = {t} reached sup norm {s}"),
        ),
    };
    let report = DegreeReport::finish(
        Rule::Normalization,
        1,
        vec![hyp],
        Window::ball(declared_radius, "sup"),
        None,
    );
    Ok((report, runs))
}

#[derive(Debug, Clone, Serialize)]
pub struct Ls2Report {
    pub holds: bool,
    /// `-max [u - u₀, v]₊` over samples and box corners.
    pub margin: f64,
    pub worst_point: Vec<f64>,
    pub samples: usize,
}

/// Samples `sup_{v ∈ F(u)} [u - u₀, v]₊` on the sphere `|u - u₀| = R` in `K`.
pub fn ls2_condition_check(
    op: &DiscreteOperator,
    field: &dyn BoxMap,
    u0: &[f64],
    radius: f64,
    sphere_samples: usize,
    seed: u64,
) -> Result<Ls2Report> {
    let n = op.dim();
    if u0.len() != n || field.dim() != n {
        return Err(Error::Dimension { expected: n, got: u0.len() });
    }
    let au0 = norm2(&op.apply(u0));
    if au0 > 1e-12 * (1.0 + norm2(u0)) {
        return Err(Error::InvalidArgument(format!("A u0 = {au0:e} is not zero")));
    }
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    for k in 0..sphere_samples {
        let mut rng = stream_rng(seed, k as u64);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0f64..1.0).abs()).collect();
        let s = norm2(&v);
        if s > 0.0 {
            dirs.push(v.iter().map(|x| x / s).collect());
        }
    }
    let mut worst = f64::NEG_INFINITY;
    let mut worst_point = u0.to_vec();
    for d in &dirs {
        let u: Vec<f64> = u0.iter().zip(d).map(|(a, b)| (a + radius * b).max(0.0)).collect();
        let b = field.eval_box(&u)?;
        let x = sub(&u, u0);
        // [x, ·]₊ is linear for x ≠ 0, so the sup over the box is a corner
        let val = if norm2(&x) > 0.0 { b.sup_dot(&x) / norm2(&x) } else { semi_inner_plus(&x, &b.hi) };
        if val > worst {
            worst = val;
            worst_point = u;
        }
    }
    Ok(Ls2Report {
        holds: worst < 0.0,
        margin: -worst,
        worst_point,
        samples: dirs.len(),
    })
}
