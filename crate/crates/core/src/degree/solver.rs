//! Resolvent fixed-point iteration `u ← J_λ(r(u + λ v(u)))`.

use serde::{Deserialize, Serialize};

use crate::cones::ConstraintCone;
use crate::error::{Error, Result};
use crate::linalg::{dist_inf, norm_inf};
use crate::operators::{DiscreteOperator, EigenPair, LinearAction};
use crate::par::{map_indexed, stream_rng, Execution};
use crate::setvalued::{select_from_box, BoxMap, BoxValue, Selection};
use rand::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Resolvent step; `None` means `0.1·min(1, 1/λ₁)`.
    pub lambda: Option<f64>,
    pub eps: f64,
    pub max_iters: usize,
    pub residual_tol: f64,
    pub damping: f64,
    pub nontrivial_floor: f64,
    /// Multipliers `s` for the `s·φ` starts.
    pub start_scales: Vec<f64>,
    /// Extra seeded random starts in `K`.
    pub random_starts: usize,
    /// Abort a run once `‖u‖_∞` exceeds this.
    pub escape_radius: Option<f64>,
    pub seed: u64,
    pub selection: Selection,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            eps: 1e-3,
            max_iters: 100_000,
            residual_tol: 1e-8,
            damping: 1.0,
            nontrivial_floor: 1e-2,
            start_scales: vec![0.1, 1.0, 10.0],
            random_starts: 2,
            escape_radius: None,
            seed: 0,
            selection: Selection::Mid,
        }
    }
}

impl SolverConfig {
    pub fn step(&self, lambda1: f64) -> f64 {
        self.lambda.unwrap_or(0.1 * 1f64.min(1.0 / lambda1))
    }

    pub fn validate(&self, omega: f64, lambda1: f64) -> Result<()> {
        let step = self.step(lambda1);
        let checks = [
            (step > 0.0, "lambda"),
            (self.eps > 0.0, "eps"),
            (self.max_iters > 0, "max_iters"),
            (self.residual_tol > 0.0, "residual_tol"),
            (self.damping > 0.0 && self.damping <= 1.0, "damping"),
            (self.nontrivial_floor > 0.0, "nontrivial_floor"),
        ];
        if let Some((_, name)) = checks.iter().find(|(ok, _)| !ok) {
            return Err(Error::InvalidArgument(format!("solver setting `{name}` is out of range")));
        }
        if omega != 0.0 && step * omega >= 1.0 {
            return Err(Error::InvalidArgument("λω must be < 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    /// `‖Au - P(Au)‖₂`, `P` the projection onto the box at `u`.
    pub residual: f64,
    /// Largest per-node Euclidean distance from `Au(x)` to the box at `u(x)`.
    pub box_distance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trivial: bool,
    pub escaped: bool,
    pub sup_norm: f64,
    pub start_index: usize,
    pub method: String,
}

/// Residual diagnostics at `u`, computed from scratch.
pub fn coincidence_residual(op: &DiscreteOperator, field: &dyn BoxMap, u: &[f64]) -> Result<(f64, f64)> {
    let b = field.eval_box(u)?;
    let au = op.apply(u);
    Ok((b.distance(&au), node_distance(&b, &au, op.nodes())))
}

fn node_distance(b: &BoxValue, au: &[f64], nodes: usize) -> f64 {
    let m = au.len() / nodes.max(1);
    (0..nodes)
        .map(|x| {
            (0..m)
                .map(|c| {
                    let i = c * nodes + x;
                    (b.lo[i] - au[i]).max(au[i] - b.hi[i]).max(0.0).powi(2)
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// Builds a report for `u` with independently recomputed residuals.
pub fn report_at(
    op: &DiscreteOperator,
    field: &dyn BoxMap,
    u: Vec<f64>,
    cfg: &SolverConfig,
    iterations: usize,
    converged: bool,
    start_index: usize,
    method: &str,
) -> Result<SolveReport> {
    let (residual, box_distance) = coincidence_residual(op, field, &u)?;
    let sup = norm_inf(&u);
    Ok(SolveReport {
        residual,
        box_distance,
        iterations,
        converged,
        trivial: sup < cfg.nontrivial_floor,
        escaped: false,
        sup_norm: sup,
        start_index,
        method: method.into(),
        solution: u,
    })
}

/// Runs the damped resolvent iteration from `u0`.
pub fn resolvent_fixed_point_solve(
    op: &DiscreteOperator,
    field: &dyn BoxMap,
    cone: &ConstraintCone,
    cfg: &SolverConfig,
    lambda1: f64,
    u0: &[f64],
) -> Result<SolveReport> {
    cfg.validate(op.omega(), lambda1)?;
    let n = op.dim();
    if u0.len() != n || field.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: if u0.len() != n { u0.len() } else { field.dim() },
        });
    }
    if !cone.contains(u0) {
        return Err(Error::InvalidArgument("start vector is not in the cone".into()));
    }
    let lambda = cfg.step(lambda1);
    let d = cfg.damping;
    let mut u = cone.retract(u0);
    let mut converged = false;
    let mut it = 0;
    while it < cfg.max_iters {
        it += 1;
        let b = field.eval_box(&u)?;
        let v = select_from_box(&b, &u, cone, cfg.selection)?;
        let mut y: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + lambda * b).collect();
        cone.retract_in_place(&mut y);
        let j = op.resolvent(lambda, &y)?;
        let next: Vec<f64> = u.iter().zip(&j).map(|(a, b)| (1.0 - d) * a + d * b).collect();
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::Breakdown(format!("non-finite iterate at step {it}")));
        }
        let inc = dist_inf(&next, &u);
        u = next;
        if let Some(esc) = cfg.escape_radius {
            if norm_inf(&u) > esc {
                let mut rep = report_at(op, field, u, cfg, it, false, 0, "picard")?;
                rep.escaped = true;
                return Ok(rep);
            }
        }
        if inc <= cfg.residual_tol * lambda {
            let (_, bd) = coincidence_residual(op, field, &u)?;
            if bd <= cfg.residual_tol {
                converged = true;
                break;
            }
        }
    }
    report_at(op, field, u, cfg, it, converged, 0, "picard")
}

/// Default starts: `s·φ` on every component (φ scaled to unit sup-norm) and
/// seeded random points of `K` with entries in `[0, 1]`.
pub fn default_starts(eig: &EigenPair, components: usize, cfg: &SolverConfig) -> Vec<Vec<f64>> {
    let peak = norm_inf(&eig.phi);
    let mut starts: Vec<Vec<f64>> = cfg
        .start_scales
        .iter()
        .map(|s| {
            (0..components)
                .flat_map(|_| eig.phi.iter().map(move |p| s * p / peak))
                .collect()
        })
        .collect();
    let n = eig.phi.len() * components;
    for k in 0..cfg.random_starts {
        let mut rng = stream_rng(cfg.seed, k as u64);
        starts.push((0..n).map(|_| rng.gen_range(0.0..1.0)).collect());
    }
    starts
}

/// Runs one solve per start (in parallel under the default feature) and
/// returns the reports in start order. Failed runs are kept as errors.
pub fn multistart_solve(
    op: &DiscreteOperator,
    field: &dyn BoxMap,
    cone: &ConstraintCone,
    cfg: &SolverConfig,
    lambda1: f64,
    starts: &[Vec<f64>],
    exec: Execution,
) -> Vec<Result<SolveReport>> {
    map_indexed(starts.len(), exec, |k| {
        resolvent_fixed_point_solve(op, field, cone, cfg, lambda1, &starts[k]).map(|mut r| {
            r.start_index = k;
            r
        })
    })
}

/// Deterministic ranking: lowest residual first, then lowest start index.
pub fn best_report<'a, I: IntoIterator<Item = &'a SolveReport>>(reports: I) -> Option<&'a SolveReport> {
    reports
        .into_iter()
        .min_by(|a, b| a.residual.total_cmp(&b.residual).then(a.start_index.cmp(&b.start_index)))
}
