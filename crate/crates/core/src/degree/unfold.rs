//! Newton refinement for fields with jumps.
//!
//! Discrete solutions of a discontinuous problem often sit exactly on a
//! threshold, where the selection-based iteration chatters between branches.
//! Here the graph of the regularized field is unfolded: each node value is
//! described by a parameter `s >= 0` that runs along the branches and crosses
//! every threshold `t` through a unit-length vertical segment on which the
//! value moves linearly from the left limit to the right limit. The system
//! `A u(s) = v(s)` is then continuous in `s` and solved by damped Newton.
//!
//! Supported when `γ` is the identity and every piecewise node of component
//! `c` switches on variable `c`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exprfield::{Branch, FieldExpr};
use crate::linalg::norm_inf;
use crate::operators::{DiscreteOperator, LinearAction};

/// Threshold layout of one component.
#[derive(Debug, Clone)]
struct ComponentJumps {
    /// Distinct positive thresholds, ascending, with the node ids switching there.
    thresholds: Vec<(f64, Vec<usize>)>,
}

/// Position of a node value on the unfolded graph.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Place {
    Branch(f64),
    /// On the segment over threshold index `k`, at fraction `θ ∈ [0, 1]`.
    Segment(usize, f64),
}

pub struct Unfolding<'a> {
    f: &'a FieldExpr,
    comps: Vec<ComponentJumps>,
}

impl<'a> Unfolding<'a> {
    pub fn new(f: &'a FieldExpr) -> Result<Self> {
        let m = f.arity();
        let mut comps = vec![ComponentJumps { thresholds: Vec::new() }; m];
        for j in f.jump_points() {
            if j.var != j.component {
                return Err(Error::Unsupported(format!(
                    "component {} switches on variable {}; only self-switching jumps can be unfolded",
                    j.component + 1,
                    j.var + 1
                )));
            }
            if j.threshold <= 0.0 {
                continue;
            }
            let th = &mut comps[j.component].thresholds;
            match th.iter_mut().find(|(t, _)| *t == j.threshold) {
                Some((_, ids)) => ids.push(j.node),
                None => th.push((j.threshold, vec![j.node])),
            }
        }
        for c in comps.iter_mut() {
            c.thresholds.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        Ok(Self { f, comps })
    }

    fn place(&self, c: usize, s: f64) -> Place {
        let mut offset = 0.0;
        for (k, (t, _)) in self.comps[c].thresholds.iter().enumerate() {
            if s < t + offset {
                return Place::Branch(s - offset);
            }
            if s <= t + offset + 1.0 {
                return Place::Segment(k, s - t - offset);
            }
            offset += 1.0;
        }
        Place::Branch(s - offset)
    }

    fn to_param(&self, c: usize, u: f64) -> f64 {
        let mut offset = 0.0;
        for (t, _) in &self.comps[c].thresholds {
            if u < *t {
                break;
            }
            if u == *t {
                return u + offset + 0.5;
            }
            offset += 1.0;
        }
        u + offset
    }

    fn value_of(&self, c: usize, s: f64) -> f64 {
        match self.place(c, s) {
            Place::Branch(u) => u,
            Place::Segment(k, _) => self.comps[c].thresholds[k].0,
        }
    }

    /// `v_c` at a node whose values are `u`, with component `c` at `place`.
    fn field_value(&self, c: usize, u: &[f64], place: Place) -> Result<f64> {
        let th = &self.comps[c].thresholds;
        let side = |id: usize, seg: Option<(usize, Branch)>| -> Option<Branch> {
            for (k, (t, ids)) in th.iter().enumerate() {
                if ids.contains(&id) {
                    if let Some((sk, b)) = seg {
                        if sk == k {
                            return Some(b);
                        }
                    }
                    return Some(if u[c] < *t { Branch::Left } else { Branch::Right });
                }
            }
            None
        };
        match place {
            Place::Branch(_) => self.f.eval_component(c, u, &|id| side(id, None)),
            Place::Segment(k, theta) => {
                let l = self.f.eval_component(c, u, &|id| side(id, Some((k, Branch::Left))))?;
                let r = self.f.eval_component(c, u, &|id| side(id, Some((k, Branch::Right))))?;
                Ok((1.0 - theta) * l + theta * r)
            }
        }
    }

    fn residual(&self, op: &DiscreteOperator, s: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let nodes = op.nodes();
        let m = self.comps.len();
        let u: Vec<f64> = (0..s.len()).map(|i| self.value_of(i / nodes, s[i])).collect();
        let mut r = op.apply(&u);
        let mut pt = vec![0.0; m];
        for x in 0..nodes {
            for c in 0..m {
                pt[c] = u[c * nodes + x];
            }
            for c in 0..m {
                let i = c * nodes + x;
                r[i] -= self.field_value(c, &pt, self.place(c, s[i]))?;
            }
        }
        Ok((r, u))
    }

    /// Damped Newton from `u0`; returns the node values on success.
    pub fn refine(&self, op: &DiscreteOperator, u0: &[f64], tol: f64, max_iters: usize) -> Result<Vec<f64>> {
        let n = op.dim();
        let nodes = op.nodes();
        let mut s: Vec<f64> = (0..n).map(|i| self.to_param(i / nodes, u0[i].max(0.0))).collect();
        let (mut r, mut u) = self.residual(op, &s)?;
        for _ in 0..max_iters {
            let rn = norm_inf(&r);
            if rn <= tol {
                return Ok(u);
            }
            let mut jac = DMatrix::zeros(n, n);
            for j in 0..n {
                let h = 1e-7 * (1.0 + s[j].abs());
                let mut sp = s.clone();
                sp[j] += h;
                let (rp, _) = self.residual(op, &sp)?;
                for i in 0..n {
                    jac[(i, j)] = (rp[i] - r[i]) / h;
                }
            }
            let step = jac
                .lu()
                .solve(&DVector::from_column_slice(&r))
                .ok_or_else(|| Error::Singular("unfolded Jacobian is singular".into()))?;
            let mut t = 1.0;
            loop {
                let cand: Vec<f64> = (0..n).map(|i| (s[i] - t * step[i]).max(0.0)).collect();
                let (rc, uc) = self.residual(op, &cand)?;
                if norm_inf(&rc) < (1.0 - 1e-4 * t) * rn {
                    s = cand;
                    r = rc;
                    u = uc;
                    break;
                }
                t *= 0.5;
                if t < 1e-12 {
                    return Err(Error::NoConvergence("line search stalled in the unfolded Newton solve".into()));
                }
            }
        }
        if norm_inf(&r) <= tol {
            Ok(u)
        } else {
            Err(Error::NoConvergence("unfolded Newton solve hit its iteration cap".into()))
        }
    }
}
