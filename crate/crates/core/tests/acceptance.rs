//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use std::time::{Duration, Instant};

use coindeg::cones::ConstraintCone;
use coindeg::degree::{
    brouwer_degree_bruteforce, default_starts, degree_eigen_ray, degree_linear, existence_pipeline, iteration_map,
    multistart_solve, Outcome, OracleConfig, PipelineConfig, PrimitiveVerdict, SolverConfig,
};
use coindeg::exprfield::FieldExpr;
use coindeg::operators::{
    resolvent_identity_check, resolvent_identity_residual, shift_identity_check, DiscreteOperator, GridSpec, LinearAction,
};
use coindeg::par::Execution;
use coindeg::problem::{Diffusion, Problem};
use coindeg::setvalued::{
    epsilon_tangent_approximation, filippov, krasowski, separating_field, BoxValue, FnBoxMap, NemytskiiField,
    IdentityMap, SetValuedField,
};
use coindeg::spectral::{certificate, sigma_plus, spectral_abscissa, ReactionMatrices, Verdict};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, u64);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn op1d(n: usize, m: usize) -> DiscreteOperator {
    DiscreteOperator::laplacian(GridSpec::one_d(1.0, n, m).unwrap()).unwrap()
}

fn closed_form_lambda1(n: usize) -> f64 {
    let h = 1.0 / (n + 1) as f64;
    2.0 / (h * h) * (1.0 - (std::f64::consts::PI * h).cos())
}

fn c1_cone_invariance() -> Check {
    let mut grids = Vec::new();
    for m in [1, 2] {
        for n in [1, 15, 63] {
            grids.push(GridSpec::one_d(1.0, n, m).unwrap());
        }
        grids.push(GridSpec::two_d(1.0, 1.0, 15, 15, m).unwrap());
    }
    let mut worst = f64::INFINITY;
    for (g, grid) in grids.into_iter().enumerate() {
        let op = DiscreteOperator::laplacian(grid).map_err(e)?;
        let n = op.dim();
        for lambda in [1e-3, 0.1, 1.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + g as u64);
            for _ in 0..200 {
                let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
                let j = op.resolvent(lambda, &v).map_err(e)?;
                worst = worst.min(j.iter().copied().fold(f64::INFINITY, f64::min));
            }
        }
    }
    ensure(worst >= -1e-12, format!("min component {worst:e}"))?;
    Ok(format!("min component {worst:.3e}"))
}

fn c2_resolvent_identities() -> Check {
    let pairs = [(0.1, 0.05), (1.0, 0.001), (0.5, 0.7), (0.01, 1.0), (0.3, 0.3)];
    let mut worst: f64 = 0.0;
    let mut control = f64::INFINITY;
    for (k, grid) in [GridSpec::one_d(1.0, 31, 2).unwrap(), GridSpec::two_d(1.0, 2.0, 7, 9, 1).unwrap()]
        .into_iter()
        .enumerate()
    {
        let op = DiscreteOperator::laplacian(grid).map_err(e)?;
        for (i, &(l1, l2)) in pairs.iter().enumerate() {
            let seed = (10 * k + i) as u64;
            worst = worst.max(resolvent_identity_check(&op, l1, l2, 20, seed).map_err(e)?);
            worst = worst.max(shift_identity_check(&op, 0.5, l1, 20, seed).map_err(e)?);
            if l1 != l2 {
                control = control.min(resolvent_identity_residual(&op, l1, l2, l1, 20, seed).map_err(e)?);
            }
        }
    }
    ensure(worst <= 1e-9, format!("identity residual {worst:e}"))?;
    ensure(control > 1e-3, format!("corrupted control only {control:e}"))?;
    Ok(format!("max residual {worst:.2e}, corrupted min {control:.2e}"))
}

fn c3_eigenvalues() -> Check {
    let ns = [1usize, 3, 7, 15, 31, 63];
    let mut errs = Vec::new();
    let mut worst: f64 = 0.0;
    for &n in &ns {
        let l = op1d(n, 1).principal_eigenpair().map_err(e)?.lambda1;
        let exact = closed_form_lambda1(n);
        worst = worst.max((l - exact).abs() / exact);
        errs.push((l - std::f64::consts::PI.powi(2)).abs());
    }
    ensure(worst <= 1e-9, format!("closed-form mismatch {worst:e}"))?;
    // h halves between consecutive n = 2^k - 1
    let orders: Vec<f64> = errs.windows(2).skip(1).map(|w| (w[0] / w[1]).log2()).collect();
    for o in &orders {
        ensure((o - 2.0).abs() <= 0.1, format!("observed orders {orders:?}"))?;
    }
    Ok(format!("rel err {worst:.1e}, orders {:?}", orders.iter().map(|o| (o * 1000.0).round() / 1000.0).collect::<Vec<_>>()))
}

fn c4_perron() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let m = 2 + k % 5;
        let d = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                rng.gen_range(-5.0..5.0)
            } else if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(0.0..2.0)
            }
        });
        let s = spectral_abscissa(&d).map_err(e)?;
        let sp = sigma_plus(&d).map_err(e)?;
        let top = sp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ensure(!sp.is_empty(), format!("empty σ₊ for matrix {k}"))?;
        worst = worst.max((s - top).abs());
    }
    ensure(worst <= 1e-9, format!("|s - max σ₊| = {worst:e}"))?;
    Ok(format!("max |s - max σ₊| = {worst:.1e}"))
}

fn oracle_linear(op: &DiscreteOperator, d: DMatrix<f64>) -> Result<i64, String> {
    let m = d.nrows();
    let f = FnBoxMap {
        dim: m,
        f: move |u: &[f64]| {
            let v = &d * nalgebra::DVector::from_column_slice(u);
            Ok(BoxValue::point(v.as_slice().to_vec()))
        },
    };
    let g = iteration_map(op, &f, 0.05);
    let r = brouwer_degree_bruteforce(&g, &vec![-1.0; m], &vec![1.0; m], &OracleConfig::default()).map_err(e)?;
    Ok(r.degree)
}

fn c5_formula_vs_oracle() -> Check {
    let op = op1d(1, 1);
    let mut rows = Vec::new();
    for (d, want) in [(5.0, 1), (10.0, 0)] {
        let formula = degree_linear(&op, &DMatrix::from_element(1, 1, d), 1.0).map_err(e)?.value;
        let oracle = oracle_linear(&op, DMatrix::from_element(1, 1, d))?;
        ensure(formula == Some(want) && oracle == want, format!("D = {d}: formula {formula:?}, oracle {oracle}"))?;
        rows.push(want);
    }
    for (l, want) in [(0.0, 1), (9.0, 0)] {
        let formula = degree_eigen_ray(&op, l).map_err(e)?.value;
        let oracle = oracle_linear(&op, DMatrix::from_element(1, 1, l))?;
        ensure(formula == Some(want) && oracle == want, format!("λ = {l}: formula {formula:?}, oracle {oracle}"))?;
        rows.push(want);
    }
    let op2 = op1d(1, 2);
    for (vals, want) in [([2.0, 1.0, 1.0, 3.0], 1), ([9.0, 1.0, 2.0, 9.0], 0)] {
        let d = DMatrix::from_row_slice(2, 2, &vals);
        let formula = degree_linear(&op2, &d, 1.0).map_err(e)?.value;
        let oracle = oracle_linear(&op2, d)?;
        ensure(formula == Some(want) && oracle == want, format!("D = {vals:?}: formula {formula:?}, oracle {oracle}"))?;
    }
    Ok(format!("scalar {rows:?} and both 2x2 cases agree"))
}

/// Damped Newton for `A u = μu/(1+u)` on the 1D grid with a hand-rolled
/// tridiagonal solve.
fn newton_logistic(n: usize, mu: f64, u0: &[f64]) -> Vec<f64> {
    let h = 1.0 / (n + 1) as f64;
    let k = 1.0 / (h * h);
    let resid = |u: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let l = if i > 0 { u[i - 1] } else { 0.0 };
                let r = if i + 1 < n { u[i + 1] } else { 0.0 };
                k * (2.0 * u[i] - l - r) - mu * u[i] / (1.0 + u[i])
            })
            .collect()
    };
    let nrm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut u = u0.to_vec();
    let mut r = resid(&u);
    for _ in 0..100 {
        if nrm(&r) < 1e-13 {
            break;
        }
        let diag: Vec<f64> = u.iter().map(|x| 2.0 * k - mu / (1.0 + x).powi(2)).collect();
        let off = -k;
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let denom = diag[i] - if i > 0 { off * c[i - 1] } else { 0.0 };
            c[i] = off / denom;
            d[i] = (r[i] - if i > 0 { off * d[i - 1] } else { 0.0 }) / denom;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = (0..n).map(|i| u[i] - t * d[i]).collect();
            let rc = resid(&cand);
            if nrm(&rc) < nrm(&r) || t < 1e-8 {
                u = cand;
                r = rc;
                break;
            }
            t *= 0.5;
        }
    }
    u
}

fn logistic_problem(n: usize, diffusion: Diffusion, r0: f64, rinf: f64) -> Problem {
    let grid = GridSpec::one_d(1.0, n, 1).unwrap();
    let l1 = closed_form_lambda1(n);
    let f = FieldExpr::parse(&format!("{} * u1 / (1 + u1)", 2.0 * l1), 1).unwrap();
    Problem::new(
        grid,
        diffusion,
        SetValuedField::single(f).unwrap(),
        ReactionMatrices::scalar(2.0 * l1, 0.0, r0, rinf),
    )
    .unwrap()
}

fn c6_logistic() -> Check {
    let n = 63;
    let op = op1d(n, 1);
    let l1 = op.principal_eigenpair().map_err(e)?.lambda1;
    let cert = certificate(&ReactionMatrices::scalar(2.0 * l1, 0.0, 1.0, 1.0), l1).map_err(e)?;
    ensure(cert.verdict == Verdict::DegreeJumpExists, format!("verdict {:?}", cert.verdict))?;
    let problem = logistic_problem(n, Diffusion::Identity, 1.0, 1.0);
    let cfg = PipelineConfig::default();
    let rep = existence_pipeline(&problem, &cfg).map_err(e)?;
    ensure(rep.outcome == Outcome::Found, format!("outcome {:?}", rep.outcome))?;
    let best = rep.best.as_ref().unwrap();
    ensure(best.box_distance <= 1e-8, format!("box distance {:e}", best.box_distance))?;
    ensure(best.sup_norm > 1e-2, format!("sup norm {}", best.sup_norm))?;

    let eig = op.principal_eigenpair().map_err(e)?;
    let peak = eig.phi.iter().copied().fold(0.0, f64::max);
    let start: Vec<f64> = eig.phi.iter().map(|p| p / peak).collect();
    let newton = newton_logistic(n, 2.0 * l1, &start);
    let gap = best.solution.iter().zip(&newton).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(gap <= 1e-6, format!("Newton oracle gap {gap:e}"))?;

    let mut half = cfg.solver.clone();
    half.lambda = Some(0.5 * cfg.solver.step(l1));
    let starts = default_starts(&eig, 1, &half);
    let field = NemytskiiField::new(&problem.reaction, &IdentityMap, n);
    let runs = multistart_solve(&op, &field, &ConstraintCone::orthant(n), &half, l1, &starts, Execution::Auto);
    let again = runs
        .into_iter()
        .filter_map(|r| r.ok())
        .filter(|r| r.converged && !r.trivial)
        .map(|r| r.solution.iter().zip(&best.solution).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min);
    ensure(again <= 1e-6, format!("λ/2 rerun differs by {again:e}"))?;
    Ok(format!(
        "|u|∞ = {:.6}, box dist {:.1e}, Newton gap {gap:.1e}, λ/2 gap {again:.1e}",
        best.sup_norm, best.box_distance
    ))
}

fn c7_nonlinear_diffusion() -> Check {
    let rho = FieldExpr::parse("u1 + u1*u1/(1 + u1)", 1).map_err(e)?;
    let problem = logistic_problem(63, Diffusion::Nonlinear(rho), 1.0, 2.0);
    let rep = existence_pipeline(&problem, &PipelineConfig::default()).map_err(e)?;
    ensure(rep.outcome == Outcome::Found, format!("outcome {:?}: {:?}", rep.outcome, rep.notes))?;
    let res = rep.original_residual.unwrap();
    ensure(res <= 1e-7, format!("original residual {res:e}"))?;
    let u = rep.u.unwrap();
    Ok(format!("|u|∞ = {:.6}, residual in u {res:.1e}", u.iter().copied().fold(0.0, f64::max)))
}

fn c8_discontinuous() -> Check {
    let n = 63;
    let l1 = closed_form_lambda1(n);
    let (a, b) = (2.0 * l1, 0.1);
    let f = FieldExpr::parse(&format!("piecewise(u1, 1, {a} * u1, {b} * u1)"), 1).map_err(e)?;
    // box at the jump is [b, a]: 0 lies outside it
    let svf = krasowski(&f).map_err(e)?;
    let at = svf.eval(&[1.0]).map_err(e)?;
    ensure(at.lo[0] > 0.0, format!("0 in the box at the jump: {at:?}"))?;
    let problem = Problem::new(
        GridSpec::one_d(1.0, n, 1).unwrap(),
        Diffusion::Identity,
        svf,
        ReactionMatrices::scalar(a, b, 1.0, 1.0),
    )
    .map_err(e)?;
    let rep = existence_pipeline(&problem, &PipelineConfig::default()).map_err(e)?;
    ensure(rep.outcome == Outcome::Found, format!("outcome {:?}: {:?}", rep.outcome, rep.notes))?;
    let prim = rep.primitive.as_ref().unwrap();
    ensure(prim.verdict == PrimitiveVerdict::Primitive, format!("primitive verdict {:?}", prim.verdict))?;

    // point override: Krasowski keeps the value at the threshold, Filippov drops it
    let g = FieldExpr::parse("piecewise(u1, 1, 0, 2, 5)", 1).map_err(e)?;
    let (k, fl) = (krasowski(&g).map_err(e)?, filippov(&g).map_err(e)?);
    let kb = k.eval(&[1.0]).map_err(e)?;
    let fb = fl.eval(&[1.0]).map_err(e)?;
    ensure(kb.lo == vec![0.0] && kb.hi == vec![5.0], format!("Krasowski box {kb:?}"))?;
    ensure(fb.lo == vec![0.0] && fb.hi == vec![2.0], format!("Filippov box {fb:?}"))?;
    for x in [0.0, 0.5, 0.999, 1.001, 3.0] {
        ensure(k.eval(&[x]).map_err(e)? == fl.eval(&[x]).map_err(e)?, format!("boxes differ at {x}"))?;
    }
    let best = rep.best.as_ref().unwrap();
    Ok(format!(
        "{} solution |u|∞ = {:.6}, box dist {:.1e}, {} nodes on the jump",
        best.method,
        best.sup_norm,
        best.box_distance,
        prim.nodes_on_jumps.len()
    ))
}

fn c9_approximation() -> Check {
    let phi = SetValuedField::from_bounds(FieldExpr::parse("u1 - 1", 1).unwrap(), FieldExpr::parse("u1 + 1", 1).unwrap())
        .map_err(e)?;
    let cone = ConstraintCone::orthant(1);
    let grid = |k: usize| -> Vec<Vec<f64>> { (0..k).map(|i| vec![2.0 * i as f64 / (k - 1) as f64]).collect() };
    let mut out = Vec::new();
    for eps in [0.1, 0.01] {
        let (approx, rep) = epsilon_tangent_approximation(&phi, &cone, &grid(50), eps).map_err(e)?;
        ensure(rep.passed, format!("eps {eps}: fails at samples"))?;
        let val = approx.check(&phi, &cone, &grid(1001)).map_err(e)?;
        ensure(
            val.passed,
            format!("eps {eps}: clarke {:e}, gap {:e}", val.max_clarke, val.max_graph_gap),
        )?;
        out.push(format!("eps {eps}: clarke {:.1e}, gap {:.1e}", val.max_clarke, val.max_graph_gap));
    }
    Ok(out.join("; "))
}

fn c10_separating() -> Check {
    let op = op1d(7, 1);
    let c = vec![1.0, 2.0, 0.5, 3.0, 0.5, 2.0, 1.0];
    let cc = c.clone();
    let f = FnBoxMap {
        dim: 7,
        f: move |_: &[f64]| Ok(BoxValue::point(cc.clone())),
    };
    // the only coincidence is A⁻¹c; sample a sphere around 0 of radius well away from it
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let samples: Vec<Vec<f64>> = (0..64)
        .map(|_| {
            let v: Vec<f64> = (0..7).map(|_| rng.gen_range(0.0..1.0)).collect();
            let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| 5.0 * x / s).collect()
        })
        .collect();
    let sep = separating_field(&op, &f, &samples, 0.5).map_err(e)?;
    let slack = sep.worst_slack();
    ensure(sep.eps0 > 0.0 && slack > 0.0, format!("eps0 {}, slack {slack:e}", sep.eps0))?;
    // independent recheck of the inequality with margin ε₀
    for s in &sep.samples {
        let inf: f64 = s.q.iter().zip(&c).map(|(q, v)| q * v).sum();
        ensure(inf >= s.w + sep.eps0, "recheck failed")?;
    }
    let ident = sep.max_identity_error();
    ensure(ident <= 1e-8, format!("⟨Au,q⟩ - w = {ident:e}"))?;
    Ok(format!("eps0 {:.3e}, slack {slack:.3e}, identity {ident:.1e}", sep.eps0))
}

fn c11_clarke() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let dist = |x: &[f64]| x.iter().map(|v| v.min(0.0).powi(2)).sum::<f64>().sqrt();
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let d = 1 + k % 6;
        let cone = ConstraintCone::orthant(d);
        let u: Vec<f64> = (0..d).map(|_| if rng.gen_bool(0.4) { 0.0 } else { rng.gen_range(0.0..3.0) }).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let closed = cone.clarke_derivative(&u, &v).map_err(e)?;
        // limsup over y → u, t ↓ 0 of (d(y + tv) - d(y))/t
        let mut best = f64::NEG_INFINITY;
        for t in [1e-4, 1e-5, 1e-6] {
            for _ in 0..40 {
                let y: Vec<f64> = u.iter().map(|x| x + t * t * rng.gen_range(-1.0..1.0)).collect();
                let y2: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a + t * b).collect();
                best = best.max((dist(&y2) - dist(&y)) / t);
            }
            let y2: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + t * b).collect();
            best = best.max((dist(&y2) - dist(&u)) / t);
        }
        worst = worst.max((best - closed).abs());
    }
    ensure(worst <= 1e-4, format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn c12_homotopy_additivity() -> Check {
    // homotopy: D(t) between two subcritical quasi-nonnegative matrices
    let n = 15;
    let op = op1d(n, 2);
    let l1 = op.principal_eigenpair().map_err(e)?.lambda1;
    let da = DMatrix::from_row_slice(2, 2, &[0.2 * l1, 0.1 * l1, 0.3 * l1, 0.1 * l1]);
    let db = DMatrix::from_row_slice(2, 2, &[0.6 * l1, 0.0, 0.2 * l1, 0.7 * l1]);
    let radius = 20.0;
    let cfg = SolverConfig {
        max_iters: 20_000,
        escape_radius: Some(radius),
        ..SolverConfig::default()
    };
    let eig = op.principal_eigenpair().map_err(e)?;
    let starts = default_starts(&eig, 2, &cfg);
    let cone = ConstraintCone::orthant(op.dim());
    let mut peak: f64 = 0.0;
    for k in 0..=10 {
        let t = k as f64 / 10.0;
        let d = &da * (1.0 - t) + &db * t;
        ensure(spectral_abscissa(&d).map_err(e)? < l1, format!("D({t}) is not subcritical"))?;
        let deg = degree_linear(&op, &d, radius).map_err(e)?.value;
        ensure(deg == Some(1), format!("degree {deg:?} at t = {t}"))?;
        let svf = SetValuedField::single(FieldExpr::linear(&d)).map_err(e)?;
        let field = NemytskiiField::new(&svf, &IdentityMap, n);
        for r in multistart_solve(&op, &field, &cone, &cfg, l1, &starts, Execution::Auto) {
            let r = r.map_err(e)?;
            ensure(!r.escaped && r.sup_norm <= radius, format!("run left the ball at t = {t}"))?;
            peak = peak.max(r.sup_norm);
        }
    }

    // additivity on the scalar logistic problem: 8u = 16u/(1+u)
    let op = op1d(1, 1);
    let f = FnBoxMap {
        dim: 1,
        f: |u: &[f64]| Ok(BoxValue::point(vec![16.0 * u[0] / (1.0 + u[0])])),
    };
    let g = iteration_map(&op, &f, 0.05);
    let cfg = OracleConfig::default();
    let deg = |lo: f64, hi: f64| brouwer_degree_bruteforce(&g, &[lo], &[hi], &cfg).map(|r| r.degree).map_err(e);
    let (big, small, ring) = (deg(-0.5, 2.0)?, deg(-0.5, 0.5)?, deg(0.5, 2.0)?);
    ensure(big == small + ring, format!("{big} != {small} + {ring}"))?;
    ensure((big, small, ring) == (1, 0, 1), format!("degrees {:?}", (big, small, ring)))?;
    Ok(format!("sweep degree 1 on 11 t-values, peak |u|∞ {peak:.1e}; additivity {big} = {small} + {ring}"))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("1 resolvent cone invariance", c1_cone_invariance, 10),
        ("2 resolvent identities", c2_resolvent_identities, 5),
        ("3 eigenvalue correctness", c3_eigenvalues, 5),
        ("4 Perron property", c4_perron, 10),
        ("5 degree formula vs oracle", c5_formula_vs_oracle, 30),
        ("6 logistic existence", c6_logistic, 60),
        ("7 nonlinear diffusion", c7_nonlinear_diffusion, 60),
        ("8 discontinuous reaction", c8_discontinuous, 60),
        ("9 epsilon-tangent approximation", c9_approximation, 5),
        ("10 separating field", c10_separating, 5),
        ("11 Clarke derivative oracle", c11_clarke, 10),
        ("12 homotopy and additivity", c12_homotopy_additivity, 30),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let t0 = Instant::now();
        let res = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let dt = t0.elapsed();
        let res = match res {
            Ok(msg) if dt > Duration::from_secs(budget) => Err(format!("{msg} (took {dt:.2?}, budget {budget} s)")),
            r => r,
        };
        match res {
            Ok(msg) => println!("PASS  criterion {name} [{dt:.2?}]: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  criterion {name} [{dt:.2?}]: {msg}");
            }
        }
    }
    println!("{} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
