//! Primitive-solution check for regularized discontinuous problems.
//!
//! A solution of the regularized inclusion is primitive when `A u = f(u)`
//! holds at all but a negligible set of nodes. At nodes where `u` sits on a
//! jump of `f`, the condition `0 ∉ φ(u) ∖ {f(u)}` has to hold for the
//! conclusion to be drawn.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprfield::FieldExpr;
use crate::operators::{DiscreteOperator, LinearAction};
use crate::setvalued::{BoxMap, BoxValue, SetValuedField};

/// Fraction of defect nodes tolerated by the verdict.
pub const DEFECT_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveVerdict {
    Primitive,
    NotPrimitive,
    HypothesisViolated,
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpNode {
    pub node: usize,
    pub component: usize,
    pub value: f64,
    pub threshold: f64,
    /// `0 ∈ box ∖ {f(u)}` at this node.
    pub violates: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrimitiveReport {
    pub verdict: PrimitiveVerdict,
    pub jump_count: usize,
    pub nodes_on_jumps: Vec<JumpNode>,
    /// Nodes where `A u ≠ f(u)` beyond tolerance.
    pub defect_nodes: Vec<usize>,
    pub defect_fraction: f64,
    pub threshold: f64,
}

/// `0 ∈ b ∖ {f}` within `tol`: some coordinate interval must contain 0 and
/// the box must not collapse to `{f}` with `f = 0`.
fn zero_in_punctured(b: &BoxValue, f: &[f64], tol: f64) -> bool {
    let contains = b.contains(&vec![0.0; f.len()], tol);
    contains && f.iter().any(|v| v.abs() > tol)
}

pub fn primitive_solution_check(
    f: &FieldExpr,
    svf: &SetValuedField,
    u: &[f64],
    op: &DiscreteOperator,
) -> Result<PrimitiveReport> {
    let m = f.arity();
    let nodes = op.nodes();
    if u.len() != m * nodes || svf.arity() != m {
        return Err(Error::Dimension {
            expected: m * nodes,
            got: u.len(),
        });
    }
    let jumps = f.jump_points();
    let au = op.apply(u);
    let scale = 1.0 + au.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let tol = 1e-7 * scale;
    let mut on_jumps = Vec::new();
    let mut defects = Vec::new();
    let mut pt = vec![0.0; m];
    for x in 0..nodes {
        for c in 0..m {
            pt[c] = u[c * nodes + x];
        }
        for j in jumps {
            let v = pt[j.var];
            if (v - j.threshold).abs() <= 1e-9 * j.threshold.abs().max(1.0) {
                if on_jumps.iter().any(|n: &JumpNode| n.node == x && n.threshold == j.threshold && n.component == j.var) {
                    continue;
                }
                let b = svf.eval_box(&pt)?;
                let fv = f.eval(&pt)?;
                on_jumps.push(JumpNode {
                    node: x,
                    component: j.var,
                    value: v,
                    threshold: j.threshold,
                    violates: zero_in_punctured(&b, &fv, 1e-12),
                });
            }
        }
        let fv = f.eval(&pt)?;
        let off = (0..m).any(|c| (au[c * nodes + x] - fv[c]).abs() > tol);
        if off {
            defects.push(x);
        }
    }
    let frac = defects.len() as f64 / nodes as f64;
    let verdict = if on_jumps.iter().any(|n| n.violates) {
        PrimitiveVerdict::HypothesisViolated
    } else if frac <= DEFECT_THRESHOLD {
        PrimitiveVerdict::Primitive
    } else {
        PrimitiveVerdict::NotPrimitive
    };
    Ok(PrimitiveReport {
        verdict,
        jump_count: jumps.len(),
        nodes_on_jumps: on_jumps,
        defect_nodes: defects,
        defect_fraction: frac,
        threshold: DEFECT_THRESHOLD,
    })
}
