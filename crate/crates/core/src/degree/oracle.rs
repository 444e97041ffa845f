//! Brute-force Brouwer degree of `h = id - g∘r` on a small box.
//!
//! Zeros of `h - p` are located by multistart damped Newton, where `p` is a
//! small seeded perturbation (a fraction of the boundary margin) that makes
//! zeros on the kinks of `r` regular almost surely. The degree is the sum of
//! `sign det Dh` over the distinct zeros inside the box.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::cones::ConstraintCone;
use crate::error::{Error, Result};
use crate::linalg::{dist_inf, norm2, norm_inf};
use crate::operators::{DiscreteOperator, LinearAction};
use crate::par::{map_indexed, stream_rng, Execution};
use crate::setvalued::{select_from_box, BoxMap, Selection};

pub const MAX_ORACLE_DIM: usize = 3;

#[derive(Debug, Clone, Serialize)]
pub struct OracleConfig {
    /// Grid starts per axis.
    pub grid_starts: usize,
    pub random_starts: usize,
    /// Boundary sample points per axis on each face.
    pub boundary_samples: usize,
    /// `|p|` as a fraction of the sampled boundary margin.
    pub perturbation: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub det_tol: f64,
    /// Compose with the orthant retraction; off gives the plain Brouwer
    /// degree of `id - g`.
    pub retract: bool,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            grid_starts: 9,
            random_starts: 32,
            boundary_samples: 41,
            perturbation: 0.05,
            newton_tol: 1e-12,
            max_newton: 100,
            det_tol: 1e-8,
            retract: true,
            seed: 0,
            exec: Execution::Auto,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleZero {
    pub point: Vec<f64>,
    pub det: f64,
    pub sign: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub degree: i64,
    pub zeros: Vec<OracleZero>,
    pub boundary_margin: f64,
    pub perturbation: Vec<f64>,
}

type MapFn<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync + 'a;

fn h(g: &MapFn<'_>, x: &[f64], p: &[f64], retract: bool) -> Result<Vec<f64>> {
    let gx = if retract {
        g(&x.iter().map(|v| v.max(0.0)).collect::<Vec<_>>())?
    } else {
        g(x)?
    };
    Ok((0..x.len()).map(|i| x[i] - gx[i] - p[i]).collect())
}

fn jacobian(g: &MapFn<'_>, x: &[f64], p: &[f64], retract: bool) -> Result<DMatrix<f64>> {
    let n = x.len();
    let mut j = DMatrix::zeros(n, n);
    for c in 0..n {
        let e = 1e-7 * (1.0 + x[c].abs());
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[c] += e;
        xm[c] -= e;
        let (fp, fm) = (h(g, &xp, p, retract)?, h(g, &xm, p, retract)?);
        for r in 0..n {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * e);
        }
    }
    Ok(j)
}

fn newton(g: &MapFn<'_>, x0: &[f64], p: &[f64], cfg: &OracleConfig, scale: f64) -> Result<Option<Vec<f64>>> {
    let mut x = x0.to_vec();
    let mut r = h(g, &x, p, cfg.retract)?;
    for _ in 0..cfg.max_newton {
        let rn = norm2(&r);
        if rn <= cfg.newton_tol * scale {
            return Ok(Some(x));
        }
        let step = match jacobian(g, &x, p, cfg.retract)?.lu().solve(&DVector::from_column_slice(&r)) {
            Some(s) => s,
            None => return Ok(None),
        };
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = (0..x.len()).map(|i| x[i] - t * step[i]).collect();
            let rc = h(g, &cand, p, cfg.retract)?;
            if norm2(&rc) < (1.0 - 1e-4 * t) * rn {
                x = cand;
                r = rc;
                break;
            }
            t *= 0.5;
            if t < 1e-10 {
                return Ok(None);
            }
        }
    }
    Ok((norm2(&r) <= cfg.newton_tol * scale).then_some(x))
}

/// Points of the box faces on a regular grid.
fn boundary_points(lo: &[f64], hi: &[f64], k: usize) -> Vec<Vec<f64>> {
    let n = lo.len();
    let mut out = Vec::new();
    let per_face = k.pow(n as u32 - 1);
    for axis in 0..n {
        for side in [lo[axis], hi[axis]] {
            for idx in 0..per_face {
                let mut rest = idx;
                let mut x = vec![0.0; n];
                for c in 0..n {
                    if c == axis {
                        x[c] = side;
                    } else {
                        let q = rest % k;
                        rest /= k;
                        x[c] = lo[c] + (hi[c] - lo[c]) * q as f64 / (k - 1).max(1) as f64;
                    }
                }
                out.push(x);
            }
        }
    }
    out
}

/// Degree of `id - g∘r` on `[lo, hi]` (of `id - g` with `retract` off).
pub fn brouwer_degree_bruteforce(g: &MapFn<'_>, lo: &[f64], hi: &[f64], cfg: &OracleConfig) -> Result<OracleReport> {
    let n = lo.len();
    if n == 0 || n > MAX_ORACLE_DIM || hi.len() != n {
        return Err(Error::InvalidArgument(format!(
            "oracle box must have dimension 1..={MAX_ORACLE_DIM}, got {n}"
        )));
    }
    if (0..n).any(|i| !(lo[i] < hi[i])) {
        return Err(Error::InvalidArgument("empty oracle box".into()));
    }
    let zero = vec![0.0; n];
    let bpts = boundary_points(lo, hi, cfg.boundary_samples.max(2));
    let bvals = map_indexed(bpts.len(), cfg.exec, |k| h(g, &bpts[k], &zero, cfg.retract).map(|v| norm2(&v)));
    let mut margin = f64::INFINITY;
    let mut at = 0;
    for (k, v) in bvals.into_iter().enumerate() {
        let v = v?;
        if v < margin {
            margin = v;
            at = k;
        }
    }
    let diam = (0..n).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
    if margin <= 1e-10 * (1.0 + diam) {
        return Err(Error::BoundaryZero(format!("id - g∘r vanishes near {:?}", bpts[at])));
    }
    let mut rng = stream_rng(cfg.seed, u64::MAX);
    let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dn = norm2(&dir).max(1e-300);
    let p: Vec<f64> = dir.iter().map(|d| d / dn * cfg.perturbation * margin).collect();

    let mut starts = Vec::new();
    let k = cfg.grid_starts.max(1);
    for idx in 0..k.pow(n as u32) {
        let mut rest = idx;
        starts.push(
            (0..n)
                .map(|c| {
                    let q = rest % k;
                    rest /= k;
                    lo[c] + (hi[c] - lo[c]) * (q as f64 + 0.5) / k as f64
                })
                .collect::<Vec<f64>>(),
        );
    }
    for s in 0..cfg.random_starts {
        let mut rng = stream_rng(cfg.seed, s as u64);
        starts.push((0..n).map(|c| rng.gen_range(lo[c]..hi[c])).collect());
    }
    let scale = 1.0 + diam;
    let found = map_indexed(starts.len(), cfg.exec, |i| newton(g, &starts[i], &p, cfg, scale));
    let mut zeros: Vec<OracleZero> = Vec::new();
    for z in found {
        let Some(x) = z? else { continue };
        if (0..n).any(|i| x[i] <= lo[i] || x[i] >= hi[i]) {
            continue;
        }
        if zeros.iter().any(|o| dist_inf(&o.point, &x) <= 1e-7 * scale) {
            continue;
        }
        let det = jacobian(g, &x, &p, cfg.retract)?.determinant();
        if det.abs() < cfg.det_tol {
            return Err(Error::IrregularZero { point: x, det });
        }
        zeros.push(OracleZero {
            point: x,
            det,
            sign: if det > 0.0 { 1 } else { -1 },
        });
    }
    zeros.sort_by(|a, b| a.point.partial_cmp(&b.point).unwrap_or(std::cmp::Ordering::Equal));
    Ok(OracleReport {
        degree: zeros.iter().map(|z| z.sign).sum(),
        zeros,
        boundary_margin: margin,
        perturbation: p,
    })
}

/// The iteration map `u ↦ J_τ(r(u + τ v(u)))` with `v` the midpoint tangent
/// selection of `field`.
pub fn iteration_map<'a>(
    op: &'a DiscreteOperator,
    field: &'a dyn BoxMap,
    tau: f64,
) -> impl Fn(&[f64]) -> Result<Vec<f64>> + Sync + 'a {
    let cone = ConstraintCone::orthant(op.dim());
    move |u: &[f64]| {
        let b = field.eval_box(u)?;
        let v = select_from_box(&b, u, &cone, Selection::Mid)?;
        let y: Vec<f64> = u.iter().zip(&v).map(|(a, b)| (a + tau * b).max(0.0)).collect();
        let out = op.resolvent(tau, &y)?;
        if norm_inf(&out).is_finite() {
            Ok(out)
        } else {
            Err(Error::Breakdown("non-finite iteration map value".into()))
        }
    }
}
