use std::fmt::Write as _;

use coindeg::degree::{
    brouwer_degree_bruteforce, degree_at_infinity, degree_at_zero, degree_linear, existence_pipeline, iteration_map,
    AnnulusConfig, DegreeReport, ExistenceReport, OracleConfig, OracleReport, Outcome, PipelineConfig,
};
use coindeg::exprfield::Branch;
use coindeg::operators::{DiscreteOperator, LinearAction};
use coindeg::problem::Problem;
use coindeg::setvalued::{filippov, krasowski, BoxMap, BoxValue, NemytskiiField, Regularization};
use coindeg::spectral::{certificate, effective_matrices, SpectralCertificate, Verdict};
use serde::Serialize;

use crate::file::{Loaded, Overrides};

pub const OK: u8 = 0;
pub const DECLINED: u8 = 2;
pub const FAILURE: u8 = 3;
pub const INVALID: u8 = 4;

/// What a command hands back to `main`.
pub struct Run {
    pub code: u8,
    pub report: serde_json::Value,
    pub summary: String,
    pub profile: Option<String>,
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn invalid(msg: String) -> u8 {
    eprintln!("error: {msg}");
    INVALID
}

#[derive(Serialize)]
struct CertifyReport<'a> {
    command: &'static str,
    lambda1: f64,
    certificate: &'a SpectralCertificate,
}

pub fn certify(file: &Loaded, ov: &Overrides) -> Result<Run, u8> {
    let problem = file.problem(ov).map_err(invalid)?;
    let op = DiscreteOperator::laplacian(problem.grid.clone()).map_err(|e| invalid(e.to_string()))?;
    let lambda1 = op.principal_eigenpair().map_err(|e| invalid(e.to_string()))?.lambda1;
    let cert = certificate(&problem.matrices, lambda1).map_err(|e| invalid(e.to_string()))?;
    let code = if cert.verdict == Verdict::DegreeJumpExists { OK } else { DECLINED };
    let mut summary = format!("λ₁ = {lambda1:.10}\n");
    let _ = writeln!(summary, "σ₊ at zero {:?}, s0 = {:.6}", cert.sigma_plus_0, cert.s0);
    let _ = writeln!(summary, "σ₊ at infinity {:?}, s∞ = {:.6}", cert.sigma_plus_inf, cert.sinf);
    let _ = writeln!(summary, "verdict: {:?}", cert.verdict);
    Ok(Run {
        code,
        report: json(&CertifyReport {
            command: "certify",
            lambda1,
            certificate: &cert,
        }),
        summary,
        profile: None,
    })
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    command: &'static str,
    seed: u64,
    report: &'a ExistenceReport,
}

pub fn solve(file: &Loaded, ov: &Overrides) -> Result<Run, u8> {
    let problem = file.problem(ov).map_err(invalid)?;
    let cfg = PipelineConfig {
        solver: file.solver(ov),
        ..PipelineConfig::default()
    };
    let rep = match existence_pipeline(&problem, &cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: pipeline failed: {e}");
            return Err(FAILURE);
        }
    };
    let code = match rep.outcome {
        Outcome::Found => OK,
        Outcome::CertificateDeclined => DECLINED,
        Outcome::TheoryGap => FAILURE,
    };
    let mut summary = format!("outcome: {:?}\nλ₁ = {:.10}\n", rep.outcome, rep.lambda1);
    if let Some(c) = &rep.certificate {
        let _ = writeln!(summary, "certificate: {:?}", c.verdict);
    }
    for (name, d) in [("zero", &rep.degree_at_zero), ("infinity", &rep.degree_at_infinity)] {
        if let Some(d) = d {
            let _ = writeln!(summary, "degree at {name}: {:?}", d.value);
        }
    }
    if let Some((r, big)) = rep.annulus {
        let _ = writeln!(summary, "annulus: [{r:.6e}, {big:.6e}]");
    }
    if let (Some(b), Some(u)) = (&rep.best, &rep.u) {
        let umax = u.iter().copied().fold(0.0, f64::max);
        let _ = writeln!(
            summary,
            "solution: max u = {umax:.10}, box distance {:.3e}, method {}",
            b.box_distance, b.method
        );
    }
    for n in &rep.notes {
        let _ = writeln!(summary, "note: {n}");
    }
    let profile = match (&rep.best, &rep.u) {
        (Some(b), Some(u)) => Some(profile_csv(&problem, &b.solution, u).map_err(|e| {
            eprintln!("error: {e}");
            FAILURE
        })?),
        _ => None,
    };
    Ok(Run {
        code,
        report: json(&SolveOutput {
            command: "solve",
            seed: problem.seed,
            report: &rep,
        }),
        summary,
        profile,
    })
}

/// `node_index,x,component,u,w,Au,box_lo,box_hi`; multi-dimensional
/// coordinates are joined with spaces inside the `x` field.
fn profile_csv(problem: &Problem, w: &[f64], u: &[f64]) -> Result<String, String> {
    let op = DiscreteOperator::laplacian(problem.grid.clone()).map_err(|e| e.to_string())?;
    let m = problem.grid.components;
    let nodes = op.nodes();
    let aw = op.apply(w);
    let mut out = String::from("node_index,x,component,u,w,Au,box_lo,box_hi\n");
    for x in 0..nodes {
        let ux: Vec<f64> = (0..m).map(|k| u[k * nodes + x]).collect();
        let b = problem.reaction.eval(&ux).map_err(|e| e.to_string())?;
        let coords: Vec<String> = problem.grid.coords(x).iter().map(|c| format!("{c:.16e}")).collect();
        for k in 0..m {
            let i = k * nodes + x;
            let _ = writeln!(
                out,
                "{x},{},{k},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                coords.join(" "),
                u[i],
                w[i],
                aw[i],
                b.lo[k],
                b.hi[k]
            );
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct JumpRow {
    component: usize,
    var: usize,
    threshold: f64,
    point: Vec<f64>,
    left: f64,
    right: f64,
    value: f64,
    krasowski: [f64; 2],
    filippov: [f64; 2],
}

#[derive(Serialize)]
struct RegularizeReport {
    command: &'static str,
    regularization: Regularization,
    jumps: Vec<JumpRow>,
}

pub fn regularize(file: &Loaded, ov: &Overrides) -> Result<Run, u8> {
    let f = match file.source_field().map_err(invalid)? {
        Some(f) => f,
        None => return Err(invalid("regularize needs a single-valued reaction `f`".into())),
    };
    let m = f.arity();
    if f.jump_points().is_empty() {
        eprintln!("warning: f is continuous, nothing to regularize");
        return Err(INVALID);
    }
    let (k, fl) = (
        krasowski(&f).map_err(|e| invalid(e.to_string()))?,
        filippov(&f).map_err(|e| invalid(e.to_string()))?,
    );
    let mut rows = Vec::new();
    let mut summary = format!("{:>4} {:>4} {:>12} {:>12} {:>12} {:>12}  krasowski / filippov\n", "comp", "var", "threshold", "left", "right", "value");
    for j in f.jump_points() {
        // other coordinates at 0, the switching one on its threshold
        let mut point = vec![0.0; m];
        point[j.var] = j.threshold;
        let side = |b: Branch| f.eval_component(j.component, &point, &|n| (n == j.node).then_some(b));
        let err = |e: coindeg::Error| invalid(format!("at jump {:?}: {e}", point));
        let (left, right, value) = (side(Branch::Left).map_err(err)?, side(Branch::Right).map_err(err)?, side(Branch::At).map_err(err)?);
        let kb = k.eval(&point).map_err(err)?;
        let fb = fl.eval(&point).map_err(err)?;
        let c = j.component;
        let _ = writeln!(
            summary,
            "{:>4} {:>4} {:>12.6} {:>12.6} {:>12.6} {:>12.6}  [{}, {}] / [{}, {}]",
            c, j.var, j.threshold, left, right, value, kb.lo[c], kb.hi[c], fb.lo[c], fb.hi[c]
        );
        rows.push(JumpRow {
            component: c,
            var: j.var,
            threshold: j.threshold,
            point,
            left,
            right,
            value,
            krasowski: [kb.lo[c], kb.hi[c]],
            filippov: [fb.lo[c], fb.hi[c]],
        });
    }
    let reg = file.regularization(ov);
    if reg == Regularization::Filippov {
        summary.push_str("warning: Filippov boxes drop point values; tangency on faces is not guaranteed\n");
    }
    Ok(Run {
        code: OK,
        report: json(&RegularizeReport {
            command: "regularize",
            regularization: reg,
            jumps: rows,
        }),
        summary,
        profile: None,
    })
}

#[derive(Serialize)]
struct OracleCheck {
    end: &'static str,
    box_radius: f64,
    radius_source: &'static str,
    linear: Option<i64>,
    linearization: Option<i64>,
    oracle: Option<i64>,
    oracle_error: Option<String>,
    agree: bool,
    oracle_report: Option<OracleReport>,
}

#[derive(Serialize)]
struct OracleOutput {
    command: &'static str,
    lambda1: f64,
    tau: f64,
    unknowns: usize,
    checks: Vec<OracleCheck>,
    agree: bool,
}

/// `w ↦ φ(γ(w))`.
struct Pointwise<'a>(&'a Problem);

#[allow(clippy::misnamed_getters)]
impl BoxMap for Pointwise<'_> {
    fn dim(&self) -> usize {
        self.0.grid.components
    }

    fn eval_box(&self, w: &[f64]) -> coindeg::Result<BoxValue> {
        self.0.reaction.eval(&self.0.diffusion.gamma(w)?)
    }
}

pub fn oracle(file: &Loaded, ov: &Overrides) -> Result<Run, u8> {
    let problem = file.problem(ov).map_err(invalid)?;
    let op = DiscreteOperator::laplacian(problem.grid.clone()).map_err(|e| invalid(e.to_string()))?;
    let n = op.dim();
    if n > 3 {
        return Err(invalid(format!("oracle needs at most 3 unknowns, the grid has {n}")));
    }
    let fail = |e: coindeg::Error| {
        eprintln!("error: {e}");
        FAILURE
    };
    let lambda1 = op.principal_eigenpair().map_err(fail)?.lambda1;
    let (g0, ginf) = effective_matrices(&problem.matrices).map_err(|e| invalid(e.to_string()))?;
    let acfg = AnnulusConfig {
        seed: problem.seed,
        ..AnnulusConfig::default()
    };
    let pw = Pointwise(&problem);
    let dz = degree_at_zero(&op, &problem.matrices, &pw, &acfg).map_err(fail)?;
    let di = degree_at_infinity(&op, &problem.matrices, &pw, &acfg).map_err(fail)?;

    let field = NemytskiiField::new(&problem.reaction, &problem.diffusion, op.nodes());
    let tau = file.solver(ov).step(lambda1);
    let g = iteration_map(&op, &field, tau);
    let ocfg = OracleConfig {
        seed: problem.seed,
        ..OracleConfig::default()
    };
    let o = &file.file.oracle;
    let mut checks = Vec::new();
    for (end, d, rep, fallback) in [("zero", &g0, &dz, o.zero_radius), ("infinity", &ginf, &di, o.infinity_radius)] {
        // a linear field gives R = 0 at infinity: any box works, use the file's
        let (radius, source) = match &rep.radius {
            Some(b) if b.radius > 0.0 && b.radius.is_finite() => (b.radius, "annulus"),
            _ => (fallback, "file"),
        };
        let linear = degree_linear(&op, d, radius).map_err(fail)?.value;
        let (oracle, oracle_error, oracle_report) =
            match brouwer_degree_bruteforce(&g, &vec![-radius; n], &vec![radius; n], &ocfg) {
                Ok(r) => (Some(r.degree), None, Some(r)),
                Err(e) => (None, Some(e.to_string()), None),
            };
        let agree = agrees(oracle, linear, rep);
        checks.push(OracleCheck {
            end,
            box_radius: radius,
            radius_source: source,
            linear,
            linearization: rep.value,
            oracle,
            oracle_error,
            agree,
            oracle_report,
        });
    }
    let all = checks.iter().all(|c| c.agree);
    let mut summary = format!("λ₁ = {lambda1:.10}, τ = {tau:e}, {n} unknowns\n");
    for c in &checks {
        let _ = writeln!(
            summary,
            "at {:<8} box ±{:.4e} ({}): formula {:?} / linearization {:?} / oracle {:?}  {}",
            c.end,
            c.box_radius,
            c.radius_source,
            c.linear,
            c.linearization,
            c.oracle,
            if c.agree { "agree" } else { "DISAGREE" }
        );
        if let Some(e) = &c.oracle_error {
            let _ = writeln!(summary, "  oracle error: {e}");
        }
    }
    Ok(Run {
        code: if all { OK } else { FAILURE },
        report: json(&OracleOutput {
            command: "oracle",
            lambda1,
            tau,
            unknowns: n,
            checks,
            agree: all,
        }),
        summary,
        profile: None,
    })
}

/// The declared-linearization degree must exist and equal the oracle; the
/// annulus rule, when it produced a value, must equal it too.
fn agrees(oracle: Option<i64>, linear: Option<i64>, rep: &DegreeReport) -> bool {
    match (oracle, linear) {
        (Some(o), Some(l)) => o == l && rep.value.is_none_or(|v| v == o),
        _ => false,
    }
}
