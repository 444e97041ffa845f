//! Continuous ε-tangent approximations built from a partition of unity.

use serde::Serialize;

use super::{select_from_box, BoxMap, Selection};
use crate::cones::ConstraintCone;
use crate::error::{Error, Result};
use crate::linalg::dist2;
use crate::par::{map_indexed, Execution};

/// `f(x) = Σ_s w_s(x) v_s / Σ_s w_s(x)` with radial bumps
/// `(1 - ‖x - x_s‖/δ)₊`.
#[derive(Debug, Clone, Serialize)]
pub struct EpsilonApproximation {
    pub samples: Vec<Vec<f64>>,
    pub selections: Vec<Vec<f64>>,
    pub delta: f64,
    pub eps: f64,
    /// Per sample: coordinates whose selection is too negative to be carried
    /// onto the face `x_i = 0`; the bump is damped by `min(1, x_i/δ)` there.
    damped: Vec<Vec<usize>>,
}

/// Both approximation conditions at one validation point.
#[derive(Debug, Clone, Serialize)]
pub struct ApproxPointCheck {
    pub point: Vec<f64>,
    pub clarke: f64,
    /// Smallest `dist(f(x), φ(y))` found over probes `y` with `‖y - x‖ < eps`.
    pub graph_gap: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxReport {
    pub eps: f64,
    pub delta: f64,
    pub max_clarke: f64,
    pub max_graph_gap: f64,
    pub passed: bool,
    pub points: Vec<ApproxPointCheck>,
}

/// Largest nearest-neighbour distance within the sample set.
fn covering_radius(samples: &[Vec<f64>]) -> f64 {
    if samples.len() < 2 {
        return 1.0;
    }
    map_indexed(samples.len(), Execution::Auto, |i| {
        samples
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, s)| dist2(s, &samples[i]))
            .fold(f64::INFINITY, f64::min)
    })
    .into_iter()
    .fold(0.0, f64::max)
}

impl EpsilonApproximation {
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = x.len();
        let mut acc = vec![0.0; d];
        let mut wsum = 0.0;
        for (s, xs) in self.samples.iter().enumerate() {
            let mut w = (1.0 - dist2(x, xs) / self.delta).max(0.0);
            if w == 0.0 {
                continue;
            }
            for &i in &self.damped[s] {
                w *= (x[i].max(0.0) / self.delta).min(1.0);
            }
            wsum += w;
            for (a, v) in acc.iter_mut().zip(&self.selections[s]) {
                *a += w * v;
            }
        }
        if !(wsum > 0.0) {
            return Err(Error::Coverage { index: 0 });
        }
        acc.iter_mut().for_each(|a| *a /= wsum);
        Ok(acc)
    }

    /// Checks `d_K°(x, f(x)) < eps` and `f(x) ∈ φ(B(x, eps)) + eps·B` at
    /// every validation point. The second condition is certified by exhibiting
    /// a probe `y` (the point itself, nearby samples, and axis shifts of size
    /// `eps/2` retracted to `K`).
    pub fn check<B: BoxMap + ?Sized>(&self, field: &B, cone: &ConstraintCone, points: &[Vec<f64>]) -> Result<ApproxReport> {
        let results = map_indexed(points.len(), Execution::Auto, |k| -> Result<ApproxPointCheck> {
            let x = &points[k];
            let fx = self.eval(x).map_err(|_| Error::Coverage { index: k })?;
            let clarke = cone.clarke_derivative(x, &fx)?;
            let mut probes: Vec<Vec<f64>> = vec![x.clone()];
            probes.extend(self.samples.iter().filter(|s| dist2(s, x) < self.eps).cloned());
            for i in 0..x.len() {
                for sgn in [-0.5, 0.5] {
                    let mut y = x.clone();
                    y[i] += sgn * self.eps;
                    probes.push(cone.retract(&y));
                }
            }
            let mut gap = f64::INFINITY;
            for y in probes.iter().filter(|y| dist2(y, x) < self.eps) {
                gap = gap.min(field.eval_box(y)?.distance(&fx));
            }
            Ok(ApproxPointCheck {
                point: x.clone(),
                clarke,
                graph_gap: gap,
                passed: clarke < self.eps && gap < self.eps,
            })
        });
        let points: Vec<ApproxPointCheck> = results.into_iter().collect::<Result<_>>()?;
        Ok(ApproxReport {
            eps: self.eps,
            delta: self.delta,
            max_clarke: points.iter().map(|p| p.clarke).fold(0.0, f64::max),
            max_graph_gap: points.iter().map(|p| p.graph_gap).fold(0.0, f64::max),
            passed: points.iter().all(|p| p.passed),
            points,
        })
    }
}

/// Builds the approximation from tangent selections at `samples` and checks
/// it at the samples themselves.
pub fn epsilon_tangent_approximation<B: BoxMap + ?Sized>(
    field: &B,
    cone: &ConstraintCone,
    samples: &[Vec<f64>],
    eps: f64,
) -> Result<(EpsilonApproximation, ApproxReport)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no sample points".into()));
    }
    for (i, s) in samples.iter().enumerate() {
        if let Some(j) = s.iter().position(|v| *v < 0.0) {
            return Err(Error::InvalidArgument(format!("sample {i} has negative coordinate {j} = {}", s[j])));
        }
    }
    let selections = map_indexed(samples.len(), Execution::Auto, |i| {
        select_from_box(&field.eval_box(&samples[i])?, &samples[i], cone, Selection::Mid)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let delta = 1.2 * covering_radius(samples);
    let floor = -eps / (2.0 * (field.dim() as f64).sqrt());
    let damped = selections
        .iter()
        .map(|v| (0..v.len()).filter(|&i| v[i] <= floor).collect())
        .collect();
    let approx = EpsilonApproximation {
        samples: samples.to_vec(),
        selections,
        delta,
        eps,
        damped,
    };
    let report = approx.check(field, cone, samples)?;
    Ok((approx, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprfield::FieldExpr;
    use crate::setvalued::{BoxValue, FnBoxMap, SetValuedField};

    fn grid(a: f64, b: f64, n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![a + (b - a) * i as f64 / (n - 1) as f64]).collect()
    }

    #[test]
    fn constant_field_is_reproduced() {
        let f = FnBoxMap {
            dim: 1,
            f: |_: &[f64]| Ok(BoxValue::point(vec![0.7])),
        };
        let cone = ConstraintCone::orthant(1);
        let (a, rep) = epsilon_tangent_approximation(&f, &cone, &grid(0.0, 2.0, 11), 0.1).unwrap();
        assert!(rep.passed);
        for x in grid(0.0, 2.0, 37) {
            assert!((a.eval(&x).unwrap()[0] - 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn interval_field_passes_both_conditions() {
        let phi = SetValuedField::from_bounds(
            FieldExpr::parse("u1 - 1", 1).unwrap(),
            FieldExpr::parse("u1 + 1", 1).unwrap(),
        )
        .unwrap();
        let cone = ConstraintCone::orthant(1);
        for eps in [0.1, 0.01] {
            let (a, rep) = epsilon_tangent_approximation(&phi, &cone, &grid(0.0, 2.0, 50), eps).unwrap();
            assert!(rep.passed);
            let val = a.check(&phi, &cone, &grid(0.0, 2.0, 301)).unwrap();
            assert!(val.passed, "{:?}", (val.max_clarke, val.max_graph_gap));
        }
    }

    #[test]
    fn negative_selections_are_damped_at_the_face() {
        // interior selections are very negative; the face sample's is 0
        let phi = SetValuedField::from_bounds(
            FieldExpr::parse("-5 - u1", 1).unwrap(),
            FieldExpr::parse("5 - 9*u1", 1).unwrap(),
        )
        .unwrap();
        let cone = ConstraintCone::orthant(1);
        let (a, _) = epsilon_tangent_approximation(&phi, &cone, &grid(0.0, 1.0, 21), 0.05).unwrap();
        assert!(a.eval(&[0.0]).unwrap()[0] >= 0.0);
    }
}
