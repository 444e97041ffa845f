//! End-to-end existence search: assumption checks, spectral certificate,
//! linearization degrees and a multistart solve for a nontrivial solution.

use serde::Serialize;

use super::annulus::AnnulusConfig;
use super::formulas::{degree_at_infinity, degree_at_zero, DegreeReport, Hypothesis};
use super::primitive::{primitive_solution_check, PrimitiveReport};
use super::solver::{best_report, default_starts, multistart_solve, report_at, SolveReport, SolverConfig};
use super::unfold::Unfolding;
use crate::cones::ConstraintCone;
use crate::error::Result;
use crate::linalg::{norm2, norm_inf};
use crate::operators::{DiscreteOperator, LinearAction};
use crate::par::{stream_rng, Execution};
use crate::problem::{Diffusion, Problem};
use crate::setvalued::{growth_constant, weak_tangency_check, BoxMap, BoxValue, NemytskiiField, Selection};
use crate::spectral::{certificate, effective_matrices, SpectralCertificate, Verdict};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Found,
    CertificateDeclined,
    TheoryGap,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub solver: SolverConfig,
    pub annulus: AnnulusConfig,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            annulus: AnnulusConfig::default(),
            exec: Execution::Auto,
        }
    }
}

/// One solver run, kept for the record.
#[derive(Debug, Clone, Serialize)]
pub struct Attempt {
    pub selection: Selection,
    pub method: String,
    pub start_index: usize,
    pub converged: bool,
    pub trivial: bool,
    pub residual: f64,
    pub box_distance: f64,
    pub sup_norm: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExistenceReport {
    pub outcome: Outcome,
    pub lambda1: f64,
    /// Gating checks on sampled points of `R^M_+`.
    pub assumptions: Vec<Hypothesis>,
    pub alpha: f64,
    pub growth_constant: f64,
    /// Finite-difference slopes of the field against the declared matrices.
    pub linearization: Vec<Hypothesis>,
    pub certificate: Option<SpectralCertificate>,
    pub degree_at_zero: Option<DegreeReport>,
    pub degree_at_infinity: Option<DegreeReport>,
    /// `[r, R]`: node-sup radius below which only `0` solves, and the l2
    /// bound on all solutions.
    pub annulus: Option<(f64, f64)>,
    pub best: Option<SolveReport>,
    /// Node values `u = γ(w)` of the best solution.
    pub u: Option<Vec<f64>>,
    /// Node-max distance of `A ρ(u)` to `φ(u)`, recomputed in `u`-variables.
    pub original_residual: Option<f64>,
    pub inside_annulus: Option<bool>,
    pub primitive: Option<PrimitiveReport>,
    pub attempts: Vec<Attempt>,
    pub notes: Vec<String>,
}

/// `w ↦ φ(γ(w))` at one node.
struct PointwiseW<'a> {
    problem: &'a Problem,
}

impl BoxMap for PointwiseW<'_> {
    fn dim(&self) -> usize {
        self.problem.grid.components
    }
    fn eval_box(&self, w: &[f64]) -> Result<BoxValue> {
        let u = self.problem.diffusion.gamma(w)?;
        self.problem.reaction.eval(&u)
    }
}

/// Sample points of `R^M_+`, faces included.
fn cone_samples(m: usize, seed: u64) -> Vec<Vec<f64>> {
    const LEVELS: [f64; 9] = [0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0];
    let mut out = Vec::new();
    if m <= 3 {
        for idx in 0..LEVELS.len().pow(m as u32) {
            let mut rest = idx;
            out.push(
                (0..m)
                    .map(|_| {
                        let q = rest % LEVELS.len();
                        rest /= LEVELS.len();
                        LEVELS[q]
                    })
                    .collect(),
            );
        }
    } else {
        for k in 0..400u64 {
            let mut rng = stream_rng(seed, k);
            out.push(
                (0..m)
                    .map(|_| {
                        if rng.gen_bool(0.25) {
                            0.0
                        } else {
                            LEVELS[rng.gen_range(1..LEVELS.len())]
                        }
                    })
                    .collect(),
            );
        }
    }
    out
}

fn assumption_checks(problem: &Problem, samples: &[Vec<f64>], cone: &ConstraintCone) -> Result<(Vec<Hypothesis>, f64, f64)> {
    let mut hyps = Vec::new();
    let tang = weak_tangency_check(&problem.reaction, cone, samples)?;
    let bad = tang.iter().filter(|ok| !**ok).count();
    hyps.push(Hypothesis {
        name: "weak_tangency".into(),
        passed: bad == 0,
        margin: -(bad as f64),
        detail: format!("{bad} of {} samples violate tangency", samples.len()),
    });
    let mut face_err: f64 = 0.0;
    let mut neg: f64 = 0.0;
    let mut alpha = f64::INFINITY;
    for u in samples {
        let r = problem.diffusion.rho(u)?;
        for i in 0..u.len() {
            if u[i] == 0.0 {
                face_err = face_err.max(r[i].abs());
            }
            neg = neg.max(-r[i]);
        }
        let nu = norm2(u);
        if nu > 0.0 {
            alpha = alpha.min(norm2(&r) / nu);
        }
    }
    if !alpha.is_finite() {
        alpha = 0.0;
    }
    hyps.push(Hypothesis {
        name: "rho_face_invariance".into(),
        passed: face_err <= 1e-12,
        margin: -face_err,
        detail: "largest |ρ(u)_i| over samples with u_i = 0".into(),
    });
    hyps.push(Hypothesis {
        name: "rho_preserves_cone".into(),
        passed: neg <= 1e-12,
        margin: -neg,
        detail: "most negative component of ρ(u) over samples".into(),
    });
    hyps.push(Hypothesis {
        name: "rho_growth".into(),
        passed: alpha > 0.0,
        margin: alpha,
        detail: "estimated α in |ρ(u)| >= α|u|".into(),
    });
    let c = growth_constant(&problem.reaction, samples)?;
    Ok((hyps, alpha, c))
}

/// Compares `(φ∘γ)(t e_j)/t` to the columns of `G₀` (small `t`) and `G∞`
/// (large `t`).
fn linearization_checks(problem: &Problem) -> Result<Vec<Hypothesis>> {
    let (g0, ginf) = effective_matrices(&problem.matrices)?;
    let pw = PointwiseW { problem };
    let m = pw.dim();
    let mut out = Vec::new();
    for (name, g, t) in [("slope_at_zero", &g0, 1e-7), ("slope_at_infinity", &ginf, 1e7)] {
        let mut err: f64 = 0.0;
        for j in 0..m {
            let mut w = vec![0.0; m];
            w[j] = t;
            let v = pw.eval_box(&w)?.midpoint();
            for i in 0..m {
                err = err.max((v[i] / t - g[(i, j)]).abs() / (1.0 + g[(i, j)].abs()));
            }
        }
        out.push(Hypothesis {
            name: name.into(),
            passed: err <= 1e-3,
            margin: 1e-3 - err,
            detail: format!("relative mismatch {err:.3e} at |w| = {t:e}"),
        });
    }
    Ok(out)
}

fn attempt(sel: Selection, r: &Result<SolveReport>) -> Attempt {
    match r {
        Ok(r) => Attempt {
            selection: sel,
            method: r.method.clone(),
            start_index: r.start_index,
            converged: r.converged,
            trivial: r.trivial,
            residual: r.residual,
            box_distance: r.box_distance,
            sup_norm: r.sup_norm,
            error: None,
        },
        Err(e) => Attempt {
            selection: sel,
            method: "picard".into(),
            start_index: usize::MAX,
            converged: false,
            trivial: false,
            residual: f64::NAN,
            box_distance: f64::NAN,
            sup_norm: f64::NAN,
            error: Some(e.to_string()),
        },
    }
}

fn good(r: &SolveReport, tol: f64) -> bool {
    r.converged && !r.trivial && r.box_distance <= tol
}

pub fn existence_pipeline(problem: &Problem, cfg: &PipelineConfig) -> Result<ExistenceReport> {
    let op = DiscreteOperator::laplacian(problem.grid.clone())?;
    let m = problem.grid.components;
    let nodes = op.nodes();
    let eig = op.principal_eigenpair()?;
    let lambda1 = eig.lambda1;
    let cone_m = ConstraintCone::orthant(m);
    let samples = cone_samples(m, problem.seed);
    let (assumptions, alpha, growth) = assumption_checks(problem, &samples, &cone_m)?;
    let linearization = linearization_checks(problem)?;
    let mut report = ExistenceReport {
        outcome: Outcome::CertificateDeclined,
        lambda1,
        assumptions,
        alpha,
        growth_constant: growth,
        linearization,
        certificate: None,
        degree_at_zero: None,
        degree_at_infinity: None,
        annulus: None,
        best: None,
        u: None,
        original_residual: None,
        inside_annulus: None,
        primitive: None,
        attempts: Vec::new(),
        notes: Vec::new(),
    };
    if problem.reaction.regularization() == Some(crate::setvalued::Regularization::Filippov) {
        report
            .notes
            .push("Filippov boxes drop point values; tangency on faces is only checked at the sampled points".into());
    }
    if report.assumptions.iter().any(|h| !h.passed) {
        report.notes.push("assumption checks failed; existence is not claimed".into());
        return Ok(report);
    }
    let cert = certificate(&problem.matrices, lambda1)?;
    let verdict = cert.verdict;
    report.certificate = Some(cert);
    if verdict != Verdict::DegreeJumpExists {
        return Ok(report);
    }

    let pw = PointwiseW { problem };
    let mut acfg = cfg.annulus.clone();
    acfg.seed = problem.seed;
    let dz = degree_at_zero(&op, &problem.matrices, &pw, &acfg)?;
    let di = degree_at_infinity(&op, &problem.matrices, &pw, &acfg)?;
    if let (Some(a), Some(b)) = (&dz.radius, &di.radius) {
        report.annulus = Some((a.radius, b.radius));
    }
    report.degree_at_zero = Some(dz);
    report.degree_at_infinity = Some(di);

    let field = NemytskiiField::new(&problem.reaction, &problem.diffusion, nodes);
    let cone = ConstraintCone::orthant(op.dim());
    let mut scfg = cfg.solver.clone();
    scfg.seed = problem.seed;
    let starts = default_starts(&eig, m, &scfg);
    let tol = scfg.residual_tol;
    let mut found: Vec<SolveReport> = Vec::new();
    let mut selections = vec![problem.selection];
    for s in [Selection::Mid, Selection::Lower, Selection::Upper] {
        if !selections.contains(&s) {
            selections.push(s);
        }
    }
    let unfolding = match (problem.reaction.source_field(), &problem.diffusion) {
        (Some(f), Diffusion::Identity) if !f.jump_points().is_empty() => Unfolding::new(f).ok(),
        _ => None,
    };
    for (k, sel) in selections.iter().enumerate() {
        scfg.selection = *sel;
        let runs = multistart_solve(&op, &field, &cone, &scfg, lambda1, &starts, cfg.exec);
        report.attempts.extend(runs.iter().map(|r| attempt(*sel, r)));
        let runs: Vec<SolveReport> = runs.into_iter().filter_map(|r| r.ok()).collect();
        found.extend(runs.iter().filter(|r| good(r, tol)).cloned());
        if found.is_empty() {
            if let Some(uf) = &unfolding {
                for r in runs.iter().filter(|r| !r.escaped && r.sup_norm >= scfg.nontrivial_floor) {
                    let refined = uf
                        .refine(&op, &r.solution, 1e-12 * (1.0 + lambda1), 60)
                        .and_then(|u| report_at(&op, &field, u, &scfg, 0, true, r.start_index, "unfold"));
                    report.attempts.push(attempt(*sel, &refined));
                    if let Ok(rep) = refined {
                        if good(&rep, tol) {
                            found.push(rep);
                        }
                    }
                }
            }
        }
        if !found.is_empty() {
            if k > 0 {
                report.notes.push(format!("solution found with {sel:?} selection"));
            }
            break;
        }
    }

    let Some(best) = best_report(&found).cloned() else {
        report.outcome = Outcome::TheoryGap;
        report.notes.push("no converged nontrivial solution from any start".into());
        return Ok(report);
    };
    let w = &best.solution;
    let mut u = vec![0.0; w.len()];
    let mut rho_u = vec![0.0; w.len()];
    let mut worst: f64 = 0.0;
    let mut wx = vec![0.0; m];
    for x in 0..nodes {
        for c in 0..m {
            wx[c] = w[c * nodes + x];
        }
        let ux = problem.diffusion.gamma(&wx)?;
        let rx = problem.diffusion.rho(&ux)?;
        for c in 0..m {
            u[c * nodes + x] = ux[c];
            rho_u[c * nodes + x] = rx[c];
        }
    }
    let a_rho = op.apply(&rho_u);
    for x in 0..nodes {
        let ux: Vec<f64> = (0..m).map(|c| u[c * nodes + x]).collect();
        let ar: Vec<f64> = (0..m).map(|c| a_rho[c * nodes + x]).collect();
        worst = worst.max(problem.reaction.eval(&ux)?.distance(&ar));
    }
    report.original_residual = Some(worst);
    if let Some((r, big)) = report.annulus {
        let node_sup = (0..nodes)
            .map(|x| norm2(&(0..m).map(|c| w[c * nodes + x]).collect::<Vec<_>>()))
            .fold(0.0, f64::max);
        report.inside_annulus = Some(node_sup > r && norm2(w) <= big);
    }
    if let (Some(f), Diffusion::Identity) = (problem.reaction.source_field(), &problem.diffusion) {
        report.primitive = Some(primitive_solution_check(f, &problem.reaction, &u, &op)?);
    }
    debug_assert!(norm_inf(&u).is_finite());
    report.u = Some(u);
    report.best = Some(best);
    report.outcome = Outcome::Found;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprfield::FieldExpr;
    use crate::operators::GridSpec;
    use crate::setvalued::SetValuedField;
    use crate::spectral::ReactionMatrices;

    fn logistic(n: usize) -> Problem {
        let grid = GridSpec::one_d(1.0, n, 1).unwrap();
        let l1 = grid.closed_form_lambda1();
        let f = FieldExpr::parse(&format!("{} * u1 / (1 + u1)", 2.0 * l1), 1).unwrap();
        Problem::new(
            grid,
            Diffusion::Identity,
            SetValuedField::single(f).unwrap(),
            ReactionMatrices::scalar(2.0 * l1, 0.0, 1.0, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn logistic_small_grid() {
        let p = logistic(15);
        let rep = existence_pipeline(&p, &PipelineConfig::default()).unwrap();
        assert_eq!(rep.outcome, Outcome::Found, "{:?}", rep.notes);
        assert_eq!(rep.degree_at_zero.as_ref().unwrap().value, Some(0));
        assert_eq!(rep.degree_at_infinity.as_ref().unwrap().value, Some(1));
        assert!(rep.best.as_ref().unwrap().box_distance <= 1e-8);
        assert_eq!(rep.inside_annulus, Some(true));
    }

    #[test]
    fn subcritical_is_declined() {
        let grid = GridSpec::one_d(1.0, 7, 1).unwrap();
        let l1 = grid.closed_form_lambda1();
        let f = FieldExpr::parse(&format!("{} * u1 / (1 + u1)", 0.5 * l1), 1).unwrap();
        let p = Problem::new(
            grid,
            Diffusion::Identity,
            SetValuedField::single(f).unwrap(),
            ReactionMatrices::scalar(0.5 * l1, 0.0, 1.0, 1.0),
        )
        .unwrap();
        let rep = existence_pipeline(&p, &PipelineConfig::default()).unwrap();
        assert_eq!(rep.outcome, Outcome::CertificateDeclined);
        assert!(rep.best.is_none());
    }

    #[test]
    fn iteration_cap_gives_theory_gap() {
        let p = logistic(7);
        let mut cfg = PipelineConfig::default();
        cfg.solver.max_iters = 1;
        let rep = existence_pipeline(&p, &cfg).unwrap();
        assert_eq!(rep.outcome, Outcome::TheoryGap);
        assert!(!rep.attempts.is_empty());
    }
}
