//! Problem data: grid, diffusion nonlinearity, reaction and linearizations.

use crate::error::{Error, Result};
use crate::exprfield::FieldExpr;
use crate::linalg::norm_inf;
use crate::operators::GridSpec;
use crate::setvalued::{PointMap, Selection, SetValuedField};
use crate::spectral::ReactionMatrices;

/// The diffusion nonlinearity `ρ` with inverse `γ`.
#[derive(Debug, Clone, PartialEq)]
pub enum Diffusion {
    Identity,
    /// `ρ` given by an expression; `γ` is computed numerically.
    Nonlinear(FieldExpr),
}

impl Diffusion {
    pub fn is_identity(&self) -> bool {
        matches!(self, Diffusion::Identity)
    }

    pub fn rho(&self, u: &[f64]) -> Result<Vec<f64>> {
        match self {
            Diffusion::Identity => Ok(u.to_vec()),
            Diffusion::Nonlinear(rho) => rho.eval(u),
        }
    }

    /// `γ(w) = ρ⁻¹(w)` by damped Newton with a forward-difference Jacobian,
    /// iterating in `R^M_+`.
    pub fn gamma(&self, w: &[f64]) -> Result<Vec<f64>> {
        let rho = match self {
            Diffusion::Identity => return Ok(w.to_vec()),
            Diffusion::Nonlinear(rho) => rho,
        };
        let m = w.len();
        let scale = 1.0 + norm_inf(w);
        let mut u: Vec<f64> = w.iter().map(|x| x.max(0.0)).collect();
        let mut r: Vec<f64> = rho.eval(&u)?.iter().zip(w).map(|(a, b)| a - b).collect();
        for _ in 0..200 {
            if norm_inf(&r) <= 1e-15 * scale {
                return Ok(u);
            }
            let mut jac = nalgebra::DMatrix::zeros(m, m);
            for j in 0..m {
                let h = 1e-7 * (1.0 + u[j].abs());
                let mut up = u.clone();
                up[j] += h;
                let fp = rho.eval(&up)?;
                for i in 0..m {
                    jac[(i, j)] = (fp[i] - w[i] - r[i]) / h;
                }
            }
            let step = jac
                .lu()
                .solve(&nalgebra::DVector::from_column_slice(&r))
                .ok_or_else(|| Error::Singular("ρ has a singular Jacobian".into()))?;
            let r0 = norm_inf(&r);
            let mut t = 1.0;
            loop {
                let cand: Vec<f64> = (0..m).map(|i| (u[i] - t * step[i]).max(0.0)).collect();
                let rc: Vec<f64> = rho.eval(&cand)?.iter().zip(w).map(|(a, b)| a - b).collect();
                if norm_inf(&rc) < r0 || t < 1e-10 {
                    u = cand;
                    r = rc;
                    break;
                }
                t *= 0.5;
            }
            if t < 1e-10 {
                break;
            }
        }
        if norm_inf(&r) <= 1e-12 * scale {
            Ok(u)
        } else {
            Err(Error::NoConvergence(format!("could not invert ρ at {w:?}")))
        }
    }
}

impl PointMap for Diffusion {
    fn apply(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.gamma(w)
    }
}

/// Everything needed to run the existence pipeline.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: GridSpec,
    pub diffusion: Diffusion,
    /// The reaction `φ` as a box-valued field (regularized if `f` jumps).
    pub reaction: SetValuedField,
    pub matrices: ReactionMatrices,
    pub selection: Selection,
    pub seed: u64,
}

impl Problem {
    pub fn new(grid: GridSpec, diffusion: Diffusion, reaction: SetValuedField, matrices: ReactionMatrices) -> Result<Self> {
        let m = grid.components;
        if reaction.arity() != m {
            return Err(Error::Arity(format!("reaction has arity {} on a grid with {m} components", reaction.arity())));
        }
        if let Diffusion::Nonlinear(rho) = &diffusion {
            if rho.arity() != m || rho.len() != m {
                return Err(Error::Arity(format!("ρ must map R^{m} to R^{m}")));
            }
        }
        matrices.validate()?;
        if matrices.dim() != m {
            return Err(Error::InvalidArgument(format!("matrices are {0}x{0}, grid has {m} components", matrices.dim())));
        }
        Ok(Self {
            grid,
            diffusion,
            reaction,
            matrices,
            selection: Selection::Mid,
            seed: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_inverts_rho() {
        let d = Diffusion::Nonlinear(FieldExpr::parse("u1 + u1*u1/(1 + u1)", 1).unwrap());
        for w in [0.0, 1e-9, 0.3, 2.0, 50.0, 1e4] {
            let u = d.gamma(&[w]).unwrap();
            assert!((d.rho(&u).unwrap()[0] - w).abs() <= 1e-12 * (1.0 + w));
        }
        assert_eq!(Diffusion::Identity.gamma(&[1.5]).unwrap(), vec![1.5]);
    }

    #[test]
    fn gamma_two_components() {
        let d = Diffusion::Nonlinear(FieldExpr::parse("2*u1 + 0.5*u2\nu2 + u2*u2", 2).unwrap());
        let u = d.gamma(&[3.0, 6.0]).unwrap();
        let back = d.rho(&u).unwrap();
        assert!((back[0] - 3.0).abs() < 1e-12 && (back[1] - 6.0).abs() < 1e-12);
    }
}
