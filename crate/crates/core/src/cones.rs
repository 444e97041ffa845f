//! The nonnegative orthant as a 1-retract.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};

/// Nonnegative orthant of `R^dimension` with metric projection as retraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintCone {
    pub dimension: usize,
    /// Retract constant; the metric projection gives 1.
    pub l_constant: f64,
    /// Coordinates with `u_i <= active_tol` are treated as active.
    pub active_tol: f64,
    /// Radius of the neighbourhood on which the retraction is defined.
    pub eta: f64,
}

impl ConstraintCone {
    pub fn orthant(dimension: usize) -> Self {
        Self {
            dimension,
            l_constant: 1.0,
            active_tol: 1e-10,
            eta: f64::INFINITY,
        }
    }

    pub fn with_active_tol(mut self, tol: f64) -> Self {
        self.active_tol = tol;
        self
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|v| *v >= -self.active_tol)
    }

    fn check_member(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dimension {
            return Err(Error::Dimension {
                expected: self.dimension,
                got: u.len(),
            });
        }
        match u.iter().position(|v| *v < -self.active_tol || v.is_nan()) {
            Some(index) => Err(Error::NotInCone { index, value: u[index] }),
            None => Ok(()),
        }
    }

    pub fn retract(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v.max(0.0)).collect()
    }

    pub fn retract_in_place(&self, x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = v.max(0.0));
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.min(0.0).powi(2)).sum::<f64>().sqrt()
    }

    pub fn is_active(&self, ui: f64) -> bool {
        ui <= self.active_tol
    }

    pub fn tangent_cone_membership(&self, u: &[f64], v: &[f64]) -> Result<bool> {
        self.check_member(u)?;
        Ok(u.iter().zip(v).all(|(ui, vi)| !self.is_active(*ui) || *vi >= -self.active_tol))
    }

    /// `d_K°(u; v)`: norm of the negative part of `v` on the active set.
    pub fn clarke_derivative(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_member(u)?;
        Ok(u.iter()
            .zip(v)
            .filter(|(ui, _)| self.is_active(**ui))
            .map(|(_, vi)| vi.min(0.0).powi(2))
            .sum::<f64>()
            .sqrt())
    }
}

/// `[x, y]₊ = lim_{h↓0} (‖x + h y‖ - ‖x‖)/h`.
pub fn semi_inner_plus(x: &[f64], y: &[f64]) -> f64 {
    let nx = norm2(x);
    if nx == 0.0 {
        norm2(y)
    } else {
        dot(x, y) / nx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retract_and_distance() {
        let c = ConstraintCone::orthant(2);
        assert_eq!(c.retract(&[1.0, 2.0]), vec![1.0, 2.0]);
        assert_eq!(c.retract(&[-1.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(c.distance(&[1.0, 0.0]), 0.0);
        assert_eq!(c.distance(&[-3.0, 4.0]), 3.0);
    }

    #[test]
    fn tangent_membership() {
        let c = ConstraintCone::orthant(2);
        assert!(c.tangent_cone_membership(&[1.0, 2.0], &[-9.0, -9.0]).unwrap());
        assert!(!c.tangent_cone_membership(&[0.0, 1.0], &[-1.0, -5.0]).unwrap());
        assert!(c.tangent_cone_membership(&[0.0, 0.0], &[0.0, 3.0]).unwrap());
        assert!(c.tangent_cone_membership(&[-1.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn clarke_examples() {
        let c = ConstraintCone::orthant(2);
        assert_eq!(c.clarke_derivative(&[1.0, 0.0], &[-3.0, -4.0]).unwrap(), 4.0);
        assert_eq!(c.clarke_derivative(&[1.0, 1.0], &[-3.0, -4.0]).unwrap(), 0.0);
        assert_eq!(c.clarke_derivative(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn semi_inner() {
        assert_eq!(semi_inner_plus(&[2.0, 0.0], &[3.0, 0.0]), 3.0);
        assert_eq!(semi_inner_plus(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert_eq!(semi_inner_plus(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
    }
}
