//! Box-valued maps.
//!
//! Every set value is a box `[lo, hi]` (one interval per component). Boxes
//! are what coordinate-threshold jumps produce under both regularizations,
//! and they make infima of linear functionals exact.

mod approx;
mod nemytskii;
mod separating;

pub use approx::{epsilon_tangent_approximation, ApproxPointCheck, ApproxReport, EpsilonApproximation};
pub use nemytskii::{nemytskii, NemytskiiField, NemytskiiImage};
pub use separating::{separating_field, SeparatingField, SeparatingSample};

use serde::{Deserialize, Serialize};

use crate::cones::ConstraintCone;
use crate::error::{Error, Result};
use crate::exprfield::{Branch, FieldExpr, JumpDescriptor};
use crate::linalg::norm2;

/// Componentwise interval `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxValue {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxValue {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] <= hi[i])) {
            return Err(Error::InvalidArgument(format!(
                "box component {i} has lower bound {} above upper bound {}",
                lo[i], hi[i]
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(v: Vec<f64>) -> Self {
        Self { lo: v.clone(), hi: v }
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        v.iter()
            .enumerate()
            .all(|(i, x)| *x >= self.lo[i] - tol && *x <= self.hi[i] + tol)
    }

    /// Nearest point of the box to `v`.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .enumerate()
            .map(|(i, x)| x.clamp(self.lo[i], self.hi[i]))
            .collect()
    }

    pub fn distance(&self, v: &[f64]) -> f64 {
        v.iter()
            .enumerate()
            .map(|(i, x)| (self.lo[i] - x).max(x - self.hi[i]).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest componentwise distance from `v` to its interval.
    pub fn distance_inf(&self, v: &[f64]) -> f64 {
        v.iter()
            .enumerate()
            .map(|(i, x)| (self.lo[i] - x).max(x - self.hi[i]).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn min_norm_point(&self) -> Vec<f64> {
        self.project(&vec![0.0; self.len()])
    }

    /// `inf_{v in box} <v, q>`.
    pub fn inf_dot(&self, q: &[f64]) -> f64 {
        q.iter()
            .enumerate()
            .map(|(i, qi)| (self.lo[i] * qi).min(self.hi[i] * qi))
            .sum()
    }

    /// `sup_{v in box} <v, q>`.
    pub fn sup_dot(&self, q: &[f64]) -> f64 {
        q.iter()
            .enumerate()
            .map(|(i, qi)| (self.lo[i] * qi).max(self.hi[i] * qi))
            .sum()
    }

    /// Largest Euclidean norm over the box.
    pub fn max_norm(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| a.abs().max(b.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &BoxValue) -> BoxValue {
        BoxValue {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    pub fn hull_point(&mut self, v: &[f64]) {
        for (i, x) in v.iter().enumerate() {
            self.lo[i] = self.lo[i].min(*x);
            self.hi[i] = self.hi[i].max(*x);
        }
    }

    pub fn contains_box(&self, other: &BoxValue, tol: f64) -> bool {
        (0..self.len()).all(|i| other.lo[i] >= self.lo[i] - tol && other.hi[i] <= self.hi[i] + tol)
    }
}

/// A box-valued map on `R^dim`.
pub trait BoxMap: Sync {
    fn dim(&self) -> usize;
    fn eval_box(&self, u: &[f64]) -> Result<BoxValue>;
}

/// Wraps a closure as a [`BoxMap`].
pub struct FnBoxMap<F> {
    pub dim: usize,
    pub f: F,
}

impl<F> BoxMap for FnBoxMap<F>
where
    F: Fn(&[f64]) -> Result<BoxValue> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_box(&self, u: &[f64]) -> Result<BoxValue> {
        (self.f)(u)
    }
}

/// A pointwise map `R^M -> R^M`, used for `γ = ρ⁻¹`.
pub trait PointMap: Sync {
    fn apply(&self, u: &[f64]) -> Result<Vec<f64>>;
}

/// The identity map.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityMap;

impl PointMap for IdentityMap {
    fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(u.to_vec())
    }
}

impl PointMap for FieldExpr {
    fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.eval(u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Regularization {
    #[default]
    Krasowski,
    Filippov,
    None,
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    Regularized(FieldExpr, Regularization),
    Bounds { lower: FieldExpr, upper: FieldExpr },
}

/// Box-valued field `φ: R^M_+ -> boxes in R^M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SetValuedField {
    arity: usize,
    source: Source,
    /// Distance below which a switching variable counts as sitting on its
    /// threshold, relative to `max(1, |t|)`.
    pub jump_tol: f64,
}

/// Krasowski regularization of `f`: hull of one-sided limits and the point value.
pub fn krasowski(f: &FieldExpr) -> Result<SetValuedField> {
    SetValuedField::regularized(f.clone(), Regularization::Krasowski)
}

/// Filippov regularization of `f`: hull of one-sided limits only.
pub fn filippov(f: &FieldExpr) -> Result<SetValuedField> {
    SetValuedField::regularized(f.clone(), Regularization::Filippov)
}

impl SetValuedField {
    pub fn regularized(f: FieldExpr, reg: Regularization) -> Result<Self> {
        if f.len() != f.arity() {
            return Err(Error::Arity(format!(
                "reaction field has {} components for {} variables",
                f.len(),
                f.arity()
            )));
        }
        Ok(Self {
            arity: f.arity(),
            source: Source::Regularized(f, reg),
            jump_tol: 1e-12,
        })
    }

    /// Single-valued field `{f(u)}`, no regularization.
    pub fn single(f: FieldExpr) -> Result<Self> {
        Self::regularized(f, Regularization::None)
    }

    /// Explicit bounds `[lower(u), upper(u)]`.
    pub fn from_bounds(lower: FieldExpr, upper: FieldExpr) -> Result<Self> {
        if lower.arity() != upper.arity() || lower.len() != upper.len() || lower.len() != lower.arity() {
            return Err(Error::Arity("lower and upper fields must both map R^M to R^M".into()));
        }
        Ok(Self {
            arity: lower.arity(),
            source: Source::Bounds { lower, upper },
            jump_tol: 1e-12,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn regularization(&self) -> Option<Regularization> {
        match &self.source {
            Source::Regularized(_, r) => Some(*r),
            Source::Bounds { .. } => None,
        }
    }

    /// The single-valued source field, if any.
    pub fn source_field(&self) -> Option<&FieldExpr> {
        match &self.source {
            Source::Regularized(f, _) => Some(f),
            Source::Bounds { .. } => None,
        }
    }

    pub fn jumps(&self) -> Vec<JumpDescriptor> {
        match &self.source {
            Source::Regularized(f, _) => f.jump_points().to_vec(),
            Source::Bounds { lower, upper } => {
                let mut j = lower.jump_points().to_vec();
                j.extend(upper.jump_points().iter().cloned());
                j
            }
        }
    }

    pub fn lower(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval(u)?.lo)
    }

    pub fn upper(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval(u)?.hi)
    }

    pub fn eval(&self, u: &[f64]) -> Result<BoxValue> {
        match &self.source {
            Source::Bounds { lower, upper } => BoxValue::new(lower.eval(u)?, upper.eval(u)?),
            Source::Regularized(f, Regularization::None) => Ok(BoxValue::point(f.eval(u)?)),
            Source::Regularized(f, reg) => regularized_box(f, *reg, u, self.jump_tol),
        }
    }

    /// One-sided values at every switching combination active at `u`, in
    /// enumeration order, paired with the chosen sides per group.
    pub fn limit_values(&self, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        match &self.source {
            Source::Regularized(f, _) => {
                let groups = active_groups(f, u, self.jump_tol);
                combos(f, u, &groups)
            }
            Source::Bounds { .. } => Ok(Vec::new()),
        }
    }
}

/// A switching group: all piecewise nodes on the same variable and threshold.
#[derive(Debug, Clone)]
struct Group {
    var: usize,
    threshold: f64,
    nodes: Vec<usize>,
}

fn on_threshold(x: f64, t: f64, tol: f64) -> bool {
    (x - t).abs() <= tol * t.abs().max(1.0)
}

fn active_groups(f: &FieldExpr, u: &[f64], tol: f64) -> Vec<Group> {
    let mut groups: Vec<Group> = Vec::new();
    for j in f.jump_points() {
        if !on_threshold(u[j.var], j.threshold, tol) {
            continue;
        }
        match groups
            .iter_mut()
            .find(|g| g.var == j.var && g.threshold.to_bits() == j.threshold.to_bits())
        {
            Some(g) => g.nodes.push(j.node),
            None => groups.push(Group {
                var: j.var,
                threshold: j.threshold,
                nodes: vec![j.node],
            }),
        }
    }
    groups
}

/// Values of `f` at `u` over every reachable left/right choice per group.
fn combos(f: &FieldExpr, u: &[f64], groups: &[Group]) -> Result<Vec<Vec<f64>>> {
    let sides: Vec<Vec<Branch>> = groups
        .iter()
        .map(|g| {
            // the left side is outside R^M_+ when the threshold is not positive
            if g.threshold > 0.0 {
                vec![Branch::Left, Branch::Right]
            } else {
                vec![Branch::Right]
            }
        })
        .collect();
    let total: usize = sides.iter().map(|s| s.len()).product();
    let mut out = Vec::with_capacity(total);
    for mut k in 0..total {
        let choice: Vec<Branch> = sides
            .iter()
            .map(|s| {
                let b = s[k % s.len()];
                k /= s.len();
                b
            })
            .collect();
        let force = |id: usize| {
            groups
                .iter()
                .zip(&choice)
                .find(|(g, _)| g.nodes.contains(&id))
                .map(|(_, b)| *b)
        };
        out.push(f.eval_forced(u, &force)?);
    }
    Ok(out)
}

fn regularized_box(f: &FieldExpr, reg: Regularization, u: &[f64], tol: f64) -> Result<BoxValue> {
    let groups = active_groups(f, u, tol);
    if groups.is_empty() {
        return Ok(BoxValue::point(f.eval(u)?));
    }
    let vals = combos(f, u, &groups)?;
    let mut b = BoxValue::point(vals[0].clone());
    for v in &vals[1..] {
        b.hull_point(v);
    }
    if reg == Regularization::Krasowski {
        b.hull_point(&f.eval(u)?);
    }
    Ok(b)
}

impl BoxMap for SetValuedField {
    fn dim(&self) -> usize {
        self.arity
    }
    fn eval_box(&self, u: &[f64]) -> Result<BoxValue> {
        self.eval(u)
    }
}

/// How a point is picked from a box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    #[default]
    Mid,
    Lower,
    Upper,
}

/// Per-sample weak tangency: the box meets `T_K(u)` iff `hi_i >= 0` on
/// every active coordinate.
pub fn weak_tangency_check<B: BoxMap + ?Sized>(field: &B, cone: &ConstraintCone, samples: &[Vec<f64>]) -> Result<Vec<bool>> {
    samples
        .iter()
        .map(|u| {
            let b = field.eval_box(u)?;
            Ok(first_tangency_violation(&b, u, cone).is_none())
        })
        .collect()
}

fn first_tangency_violation(b: &BoxValue, u: &[f64], cone: &ConstraintCone) -> Option<usize> {
    (0..u.len()).find(|&i| cone.is_active(u[i]) && b.hi[i] < -cone.active_tol)
}

/// Picks a point of `b ∩ T_K(u)`: the chosen base point with active
/// components raised to 0 (and kept inside the box).
pub fn select_from_box(b: &BoxValue, u: &[f64], cone: &ConstraintCone, strategy: Selection) -> Result<Vec<f64>> {
    if let Some(i) = first_tangency_violation(b, u, cone) {
        return Err(Error::Tangency {
            component: i,
            upper: b.hi[i],
        });
    }
    let base = match strategy {
        Selection::Mid => b.midpoint(),
        Selection::Lower => b.lo.clone(),
        Selection::Upper => b.hi.clone(),
    };
    Ok(base
        .into_iter()
        .enumerate()
        .map(|(i, v)| if cone.is_active(u[i]) { v.max(0.0).min(b.hi[i]) } else { v })
        .collect())
}

/// Midpoint tangent selection of `field` at `u`.
pub fn tangent_selection<B: BoxMap + ?Sized>(field: &B, cone: &ConstraintCone, u: &[f64]) -> Result<Vec<f64>> {
    select_from_box(&field.eval_box(u)?, u, cone, Selection::Mid)
}

/// Sampled growth constant: `max ‖v‖ / (1 + |u|)` over box corners.
pub fn growth_constant<B: BoxMap + ?Sized>(field: &B, samples: &[Vec<f64>]) -> Result<f64> {
    let mut c: f64 = 0.0;
    for u in samples {
        let b = field.eval_box(u)?;
        c = c.max(b.max_norm() / (1.0 + norm2(u)));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(text: &str) -> FieldExpr {
        FieldExpr::parse(text, 1).unwrap()
    }

    #[test]
    fn krasowski_at_and_off_jump() {
        let f = step("piecewise(u1, 1.0, 0, 1)");
        let k = krasowski(&f).unwrap();
        assert_eq!(k.eval(&[0.5]).unwrap(), BoxValue::point(vec![0.0]));
        assert_eq!(k.eval(&[1.0]).unwrap(), BoxValue::new(vec![0.0], vec![1.0]).unwrap());
    }

    #[test]
    fn filippov_excludes_point_value() {
        let f = step("piecewise(u1, 1.0, 0, 1, 5)");
        assert_eq!(filippov(&f).unwrap().eval(&[1.0]).unwrap(), BoxValue::new(vec![0.0], vec![1.0]).unwrap());
        assert_eq!(krasowski(&f).unwrap().eval(&[1.0]).unwrap(), BoxValue::new(vec![0.0], vec![5.0]).unwrap());
    }

    #[test]
    fn threshold_at_zero_has_no_left_side() {
        let f = step("piecewise(u1, 0, -1, 1)");
        assert_eq!(krasowski(&f).unwrap().eval(&[0.0]).unwrap(), BoxValue::point(vec![1.0]));
    }

    #[test]
    fn shared_switch_is_forced_consistently() {
        // both nodes switch on u1 at 1: sides (0+0) and (1+1) only
        let f = step("piecewise(u1, 1, 0, 1) + piecewise(u1, 1, 0, 1)");
        assert_eq!(krasowski(&f).unwrap().eval(&[1.0]).unwrap(), BoxValue::new(vec![0.0], vec![2.0]).unwrap());
        // independent switches in two variables give the full product
        let g = FieldExpr::parse("piecewise(u1, 1, 0, 1) - piecewise(u2, 1, 0, 1)\nu2", 2).unwrap();
        let b = krasowski(&g).unwrap().eval(&[1.0, 1.0]).unwrap();
        assert_eq!((b.lo[0], b.hi[0]), (-1.0, 1.0));
    }

    #[test]
    fn bounds_field_and_tangency() {
        let lo = FieldExpr::parse("u1 - 1", 1).unwrap();
        let hi = FieldExpr::parse("u1 + 1", 1).unwrap();
        let phi = SetValuedField::from_bounds(lo, hi).unwrap();
        let cone = ConstraintCone::orthant(1);
        assert_eq!(weak_tangency_check(&phi, &cone, &[vec![0.0], vec![3.0]]).unwrap(), vec![true, true]);
        assert_eq!(tangent_selection(&phi, &cone, &[0.0]).unwrap(), vec![0.0]);
        let neg = SetValuedField::from_bounds(step("-2"), step("-1")).unwrap();
        assert_eq!(weak_tangency_check(&neg, &cone, &[vec![0.0], vec![1.0]]).unwrap(), vec![false, true]);
        assert!(matches!(tangent_selection(&neg, &cone, &[0.0]), Err(Error::Tangency { component: 0, .. })));
        assert!(SetValuedField::from_bounds(step("1"), step("0")).unwrap().eval(&[0.0]).is_err());
    }

    #[test]
    fn selection_clamps() {
        let cone = ConstraintCone::orthant(2);
        let b = BoxValue::new(vec![-3.0, -3.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(select_from_box(&b, &[0.0, 2.0], &cone, Selection::Mid).unwrap(), vec![0.0, -1.0]);
        assert_eq!(select_from_box(&b, &[0.0, 2.0], &cone, Selection::Lower).unwrap(), vec![0.0, -3.0]);
        assert_eq!(select_from_box(&b, &[0.0, 2.0], &cone, Selection::Upper).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn box_helpers() {
        let b = BoxValue::new(vec![-1.0, 2.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(b.min_norm_point(), vec![0.0, 2.0]);
        assert_eq!(b.distance(&[0.0, 5.0]), 2.0);
        assert_eq!(b.inf_dot(&[1.0, -1.0]), -4.0);
        assert_eq!(b.sup_dot(&[1.0, -1.0]), -1.0);
    }
}
