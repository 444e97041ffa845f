//! Separating functionals for coincidence-free sample sets.
//!
//! With `J₀ = (I + λ₀A)⁻¹` and `G(u) = J₀(u + λ₀F(u)) - u`, the minimal-norm
//! point `g*` of `G(u)` gives `q₀ = g*/‖g*‖`, `q = λ₀J₀ᵀq₀` and
//! `w = ⟨u - J₀u, q₀⟩`. Then `⟨v, q⟩ >= w + ‖g*‖` for every `v ∈ F(u)`.

use serde::Serialize;

use super::BoxMap;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, sub};
use crate::operators::{DiscreteOperator, LinearAction};
use crate::par::{map_indexed, Execution};

#[derive(Debug, Clone, Serialize)]
pub struct SeparatingSample {
    pub u: Vec<f64>,
    pub q: Vec<f64>,
    pub w: f64,
    /// `‖g*‖`, the distance from 0 to `G(u)`.
    pub margin: f64,
    /// `inf_{v ∈ F(u)} ⟨v, q⟩`.
    pub inf_value: f64,
    /// `⟨Au, q⟩`, equal to `w` up to rounding.
    pub au_dot_q: f64,
    /// `dist(Au, F(u))`.
    pub box_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparatingField {
    pub lambda0: f64,
    pub eps0: f64,
    pub samples: Vec<SeparatingSample>,
}

impl SeparatingField {
    /// Smallest `inf ⟨v,q⟩ - w - eps0` over samples; positive means the strict
    /// inequality holds everywhere.
    pub fn worst_slack(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.inf_value - s.w - self.eps0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `|⟨Au, q⟩ - w|`.
    pub fn max_identity_error(&self) -> f64 {
        self.samples.iter().map(|s| (s.au_dot_q - s.w).abs()).fold(0.0, f64::max)
    }

    pub fn holds(&self) -> bool {
        self.worst_slack() > 0.0 && self.samples.iter().all(|s| norm2(&s.q) <= 1.0 + 1e-12)
    }
}

/// Minimizes `‖a + B v‖` over `lo <= v <= hi` by projected coordinate descent.
/// `cols[j]` is column `j` of `B`.
fn min_norm_affine_box(a: &[f64], cols: &[Vec<f64>], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut v: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let mut r = a.to_vec();
    for (j, c) in cols.iter().enumerate() {
        for i in 0..n {
            r[i] += c[i] * v[j];
        }
    }
    let sq: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    let free: Vec<usize> = (0..cols.len()).filter(|&j| hi[j] > lo[j] && sq[j] > 0.0).collect();
    for _ in 0..100_000 {
        let mut change: f64 = 0.0;
        for &j in &free {
            let g = dot(&cols[j], &r);
            let nv = (v[j] - g / sq[j]).clamp(lo[j], hi[j]);
            let d = nv - v[j];
            if d != 0.0 {
                for i in 0..n {
                    r[i] += cols[j][i] * d;
                }
                v[j] = nv;
                change = change.max(d.abs() * sq[j].sqrt());
            }
        }
        if change <= 1e-14 * (1.0 + norm2(&r)) {
            break;
        }
    }
    r
}

/// Builds `(q, w, ε₀)` at every sample, with `ε₀` half the smallest margin.
/// Requires `λ₀ ∈ (0, 1]` so that `‖q‖ <= 1`.
pub fn separating_field(
    op: &DiscreteOperator,
    field: &dyn BoxMap,
    samples: &[Vec<f64>],
    lambda0: f64,
) -> Result<SeparatingField> {
    if !(lambda0 > 0.0 && lambda0 <= 1.0) {
        return Err(Error::InvalidArgument(format!("λ₀ must lie in (0, 1], got {lambda0}")));
    }
    let n = op.dim();
    if field.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: field.dim(),
        });
    }
    // columns of λ₀J₀; J₀ is symmetric so these are also its rows
    let cols = map_indexed(n, Execution::Auto, |j| {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        op.resolvent(lambda0, &e).map(|c| c.into_iter().map(|x| lambda0 * x).collect::<Vec<f64>>())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let results = map_indexed(samples.len(), Execution::Auto, |k| -> Result<SeparatingSample> {
        let u = &samples[k];
        let b = field.eval_box(u)?;
        let j0u = op.resolvent(lambda0, u)?;
        let a = sub(&j0u, u);
        let g = min_norm_affine_box(&a, &cols, &b.lo, &b.hi);
        let margin = norm2(&g);
        let au = op.apply(u);
        let box_residual = b.distance(&au);
        if !(margin > 1e-12 * (1.0 + norm2(u))) {
            return Err(Error::Coincidence { index: k, margin });
        }
        let q0: Vec<f64> = g.iter().map(|x| x / margin).collect();
        let q: Vec<f64> = (0..n).map(|i| dot(&cols[i], &q0)).collect();
        let w = -dot(&a, &q0);
        Ok(SeparatingSample {
            u: u.clone(),
            inf_value: b.inf_dot(&q),
            au_dot_q: dot(&au, &q),
            q,
            w,
            margin,
            box_residual,
        })
    });
    let samples: Vec<SeparatingSample> = results.into_iter().collect::<Result<_>>()?;
    let eps0 = 0.5 * samples.iter().map(|s| s.margin).fold(f64::INFINITY, f64::min);
    Ok(SeparatingField { lambda0, eps0, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::GridSpec;
    use crate::setvalued::{BoxValue, FnBoxMap};

    fn setup() -> DiscreteOperator {
        DiscreteOperator::laplacian(GridSpec::one_d(1.0, 3, 1).unwrap()).unwrap()
    }

    #[test]
    fn constant_field_separates() {
        let op = setup();
        let f = FnBoxMap {
            dim: 3,
            f: |_: &[f64]| Ok(BoxValue::point(vec![1.0, 2.0, 1.0])),
        };
        let samples: Vec<Vec<f64>> = (0..8)
            .map(|k| {
                let t = k as f64;
                vec![1.0 + 0.1 * t, 0.5 * (t * 0.7).sin().abs(), 2.0]
            })
            .collect();
        let sep = separating_field(&op, &f, &samples, 0.5).unwrap();
        assert!(sep.eps0 > 0.0);
        assert!(sep.holds());
        assert!(sep.max_identity_error() <= 1e-8);
    }

    #[test]
    fn coincidence_is_rejected() {
        let op = setup();
        let ustar = vec![0.1, 0.3, 0.2];
        let au = op.apply(&ustar);
        let f = FnBoxMap {
            dim: 3,
            f: move |_: &[f64]| Ok(BoxValue::point(au.clone())),
        };
        let r = separating_field(&op, &f, &[vec![1.0, 1.0, 1.0], ustar], 1.0);
        assert!(matches!(r, Err(Error::Coincidence { index: 1, .. })));
    }

    #[test]
    fn wide_box_uses_min_norm_point() {
        let op = setup();
        let f = FnBoxMap {
            dim: 3,
            f: |_: &[f64]| BoxValue::new(vec![-1.0; 3], vec![1.0; 3]),
        };
        let sep = separating_field(&op, &f, &[vec![3.0, 0.0, 3.0], vec![0.0, 4.0, 0.0]], 1.0).unwrap();
        assert!(sep.holds());
        assert!(sep.max_identity_error() <= 1e-8);
    }

    #[test]
    fn lambda_range() {
        let op = setup();
        let f = FnBoxMap {
            dim: 3,
            f: |_: &[f64]| Ok(BoxValue::point(vec![0.0; 3])),
        };
        assert!(separating_field(&op, &f, &[vec![1.0; 3]], 1.5).is_err());
    }
}
