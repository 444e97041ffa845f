//! Superposition operators `u(·) ↦ φ(γ(u(·)))` on grid vectors.

use super::{BoxMap, BoxValue, PointMap};
use crate::error::{Error, Result};

/// Per-node boxes over a component-major stacked vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NemytskiiImage {
    pub components: usize,
    pub nodes: usize,
    pub stacked: BoxValue,
}

impl NemytskiiImage {
    pub fn node_box(&self, x: usize) -> BoxValue {
        let n = self.nodes;
        BoxValue {
            lo: (0..self.components).map(|c| self.stacked.lo[c * n + x]).collect(),
            hi: (0..self.components).map(|c| self.stacked.hi[c * n + x]).collect(),
        }
    }
}

/// `F = N_{φ∘γ}` as a [`BoxMap`] on stacked vectors.
pub struct NemytskiiField<'a> {
    pub field: &'a dyn BoxMap,
    pub gamma: &'a dyn PointMap,
    pub nodes: usize,
}

impl<'a> NemytskiiField<'a> {
    pub fn new(field: &'a dyn BoxMap, gamma: &'a dyn PointMap, nodes: usize) -> Self {
        Self { field, gamma, nodes }
    }

    pub fn components(&self) -> usize {
        self.field.dim()
    }

    pub fn image(&self, u: &[f64]) -> Result<NemytskiiImage> {
        nemytskii(self.field, self.gamma, u, self.nodes)
    }
}

impl BoxMap for NemytskiiField<'_> {
    fn dim(&self) -> usize {
        self.field.dim() * self.nodes
    }
    fn eval_box(&self, u: &[f64]) -> Result<BoxValue> {
        Ok(self.image(u)?.stacked)
    }
}

/// Evaluates `φ(γ(u(x)))` at every node of a stacked vector.
pub fn nemytskii(field: &dyn BoxMap, gamma: &dyn PointMap, u: &[f64], nodes: usize) -> Result<NemytskiiImage> {
    let m = field.dim();
    if u.len() != m * nodes {
        return Err(Error::Dimension {
            expected: m * nodes,
            got: u.len(),
        });
    }
    let mut lo = vec![0.0; u.len()];
    let mut hi = vec![0.0; u.len()];
    let mut pt = vec![0.0; m];
    for x in 0..nodes {
        for c in 0..m {
            pt[c] = u[c * nodes + x];
        }
        let g = gamma.apply(&pt).map_err(|e| at_node(e, x))?;
        let b = field.eval_box(&g).map_err(|e| at_node(e, x))?;
        for c in 0..m {
            lo[c * nodes + x] = b.lo[c];
            hi[c * nodes + x] = b.hi[c];
        }
    }
    Ok(NemytskiiImage {
        components: m,
        nodes,
        stacked: BoxValue { lo, hi },
    })
}

fn at_node(e: Error, x: usize) -> Error {
    match e {
        Error::Domain { component, message } => Error::Domain {
            component,
            message: format!("{message} (grid node {x})"),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprfield::FieldExpr;
    use crate::setvalued::{krasowski, IdentityMap, SetValuedField};

    #[test]
    fn pointwise_composition() {
        let f = FieldExpr::parse("2*u1/(1+u1)", 1).unwrap();
        let svf = SetValuedField::single(f.clone()).unwrap();
        let u = [0.0, 1.0, 3.0];
        let img = nemytskii(&svf, &IdentityMap, &u, 3).unwrap();
        for x in 0..3 {
            assert_eq!(img.stacked.lo[x], f.eval(&[u[x]]).unwrap()[0]);
            assert!(img.node_box(x).is_point());
        }
    }

    #[test]
    fn constant_input_gives_identical_boxes() {
        let f = FieldExpr::parse("piecewise(u1, 1, u2, 2)\nu1 - u2", 2).unwrap();
        let svf = krasowski(&f).unwrap();
        let u = [1.0, 1.0, 1.0, 0.5, 0.5, 0.5];
        let img = nemytskii(&svf, &IdentityMap, &u, 3).unwrap();
        assert_eq!(img.node_box(0), img.node_box(2));
        assert_eq!(img.node_box(0).lo, vec![0.5, 0.5]);
        assert_eq!(img.node_box(0).hi, vec![2.0, 0.5]);
    }

    #[test]
    fn domain_error_names_node() {
        let f = FieldExpr::parse("1/(u1 - 2)", 1).unwrap();
        let svf = SetValuedField::single(f).unwrap();
        match nemytskii(&svf, &IdentityMap, &[0.0, 2.0], 2) {
            Err(Error::Domain { message, .. }) => assert!(message.contains("node 1")),
            other => panic!("{other:?}"),
        }
    }
}
