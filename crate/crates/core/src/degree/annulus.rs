//! Radii of the balls around zero and infinity that contain no nontrivial
//! (resp. all) solutions, from linearization bounds.
//!
//! Write the pointwise field in `w`-variables as `φ(γ(w)) = G w + e(w)` and
//! let `κ = min_k σ_min(μ_k I - G)` over the Dirichlet eigenvalues `μ_k`.
//! Since `A ⊗ I - I ⊗ G` is block diagonal in the eigenbasis of `A`,
//! `‖A w - G w‖₂ >= κ ‖w‖₂`.
//!
//! * Near zero: if `|e(w)| <= η₀(ρ)|w|` whenever `|w| <= ρ` and `η₀ < κ`, a
//!   solution with every node value in the `ρ`-ball is trivial.
//! * Near infinity: if `|e(w)| <= η∞(ρ)|w|` for `|w| >= ρ` and `|e| <= C(ρ)`
//!   for `|w| <= ρ`, every solution has `‖w‖₂ <= C√N / (κ - η∞)`.
//!
//! The suprema `η` and `C` are sampled, so the radii carry a declared
//! sampling density rather than a proof.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::linalg::norm2;
use crate::par::{map_indexed, stream_rng, Execution};
use crate::setvalued::BoxMap;

#[derive(Debug, Clone, Serialize)]
pub struct AnnulusConfig {
    /// Radial levels per sampled ray.
    pub radial_samples: usize,
    /// Random directions in `R^M_+` besides the axes and the diagonal.
    pub random_directions: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Ratio `η/κ` accepted near zero.
    pub zero_fraction: f64,
    /// Ratio `η/κ` accepted near infinity.
    pub infinity_fraction: f64,
    pub seed: u64,
}

impl Default for AnnulusConfig {
    fn default() -> Self {
        Self {
            radial_samples: 48,
            random_directions: 24,
            rho_min: 1e-6,
            rho_max: 1e6,
            zero_fraction: 0.5,
            infinity_fraction: 0.9,
            seed: 0,
        }
    }
}

/// Radius bound at one end with its ingredients.
#[derive(Debug, Clone, Serialize)]
pub struct RadiusBound {
    pub radius: f64,
    pub kappa: f64,
    pub eta: f64,
    /// `C(ρ)` at the chosen `ρ` (infinity side only).
    pub bound: Option<f64>,
    pub rho: f64,
    pub samples: usize,
}

/// `min_k σ_min(μ_k I - G)`.
pub fn kappa(mu: &[f64], g: &DMatrix<f64>) -> f64 {
    let m = g.nrows();
    let mut best = f64::INFINITY;
    let mut last = f64::NAN;
    for &mk in mu {
        if mk == last {
            continue;
        }
        last = mk;
        let a = DMatrix::identity(m, m) * mk - g;
        let s = a.svd(false, false).singular_values.iter().copied().fold(f64::INFINITY, f64::min);
        best = best.min(s);
    }
    best
}

/// Unit directions in `R^M_+`.
pub fn directions(m: usize, extra: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            e
        })
        .collect();
    if m > 1 {
        out.push(vec![1.0 / (m as f64).sqrt(); m]);
        for k in 0..extra {
            let mut rng = stream_rng(seed, k as u64);
            let v: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
            let n = norm2(&v);
            if n > 0.0 {
                out.push(v.into_iter().map(|x| x / n).collect());
            }
        }
    }
    out
}

/// `sup_{v ∈ box(w)} |v - G w|`.
fn remainder(field: &dyn BoxMap, g: &DMatrix<f64>, w: &[f64]) -> Result<f64> {
    let b = field.eval_box(w)?;
    let m = w.len();
    let mut s = 0.0;
    for i in 0..m {
        let c: f64 = (0..m).map(|j| g[(i, j)] * w[j]).sum();
        s += (b.lo[i] - c).powi(2).max((b.hi[i] - c).powi(2));
    }
    Ok(s.sqrt())
}

/// Largest of `remainder(w)/|w|` (or `remainder(w)` when `relative` is false)
/// over `|w| = t` for each `t` in `levels`.
fn sampled_sup(field: &dyn BoxMap, g: &DMatrix<f64>, dirs: &[Vec<f64>], levels: &[f64], relative: bool) -> Result<f64> {
    let vals = map_indexed(dirs.len() * levels.len(), Execution::Auto, |k| -> Result<f64> {
        let d = &dirs[k / levels.len()];
        let t = levels[k % levels.len()];
        let w: Vec<f64> = d.iter().map(|x| x * t).collect();
        let e = remainder(field, g, &w)?;
        Ok(if relative { e / t } else { e })
    });
    vals.into_iter().try_fold(0.0_f64, |m, v| v.map(|x| m.max(x)))
}

fn linear_levels(rho: f64, k: usize) -> Vec<f64> {
    (1..=k).map(|i| rho * i as f64 / k as f64).collect()
}

fn geometric_levels(a: f64, b: f64, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| a * (b / a).powf(i as f64 / (k - 1).max(1) as f64))
        .collect()
}

/// Largest `ρ` (by bisection in `log ρ`) with `η₀(ρ) < fraction·κ₀`; `None`
/// if even `rho_min` fails.
pub fn zero_radius(field: &dyn BoxMap, g0: &DMatrix<f64>, mu: &[f64], cfg: &AnnulusConfig) -> Result<Option<RadiusBound>> {
    let k0 = kappa(mu, g0);
    let dirs = directions(g0.nrows(), cfg.random_directions, cfg.seed);
    let eta = |rho: f64| sampled_sup(field, g0, &dirs, &linear_levels(rho, cfg.radial_samples), true);
    let target = cfg.zero_fraction * k0;
    let samples = dirs.len() * cfg.radial_samples;
    let e_min = eta(cfg.rho_min)?;
    if !(e_min < target) {
        return Ok(None);
    }
    let e_max = eta(cfg.rho_max)?;
    if e_max < target {
        return Ok(Some(RadiusBound {
            radius: cfg.rho_max,
            kappa: k0,
            eta: e_max,
            bound: None,
            rho: cfg.rho_max,
            samples,
        }));
    }
    let (mut a, mut b) = (cfg.rho_min.ln(), cfg.rho_max.ln());
    let mut ea = e_min;
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        let e = eta(mid.exp())?;
        if e < target {
            a = mid;
            ea = e;
        } else {
            b = mid;
        }
        if b - a < 1e-6 {
            break;
        }
    }
    Ok(Some(RadiusBound {
        radius: a.exp(),
        kappa: k0,
        eta: ea,
        bound: None,
        rho: a.exp(),
        samples,
    }))
}

/// Smallest `C(ρ)√N/(κ∞ - η∞(ρ))` over a geometric grid of `ρ`; `None` if
/// `η∞ < fraction·κ∞` holds nowhere on the grid.
pub fn infinity_radius(
    field: &dyn BoxMap,
    ginf: &DMatrix<f64>,
    mu: &[f64],
    nodes: usize,
    cfg: &AnnulusConfig,
) -> Result<Option<RadiusBound>> {
    let ki = kappa(mu, ginf);
    let dirs = directions(ginf.nrows(), cfg.random_directions, cfg.seed);
    let mut best: Option<RadiusBound> = None;
    for rho in geometric_levels(1e-3, cfg.rho_max * 1e-4, 37) {
        let outer = geometric_levels(rho, rho * 1e4, cfg.radial_samples);
        let eta = sampled_sup(field, ginf, &dirs, &outer, true)?;
        if !(eta < cfg.infinity_fraction * ki) {
            continue;
        }
        let c = sampled_sup(field, ginf, &dirs, &linear_levels(rho, cfg.radial_samples), false)?;
        let r = c * (nodes as f64).sqrt() / (ki - eta);
        if best.as_ref().is_none_or(|b| r < b.radius) {
            best = Some(RadiusBound {
                radius: r,
                kappa: ki,
                eta,
                bound: Some(c),
                rho,
                samples: dirs.len() * cfg.radial_samples * 2,
            });
        }
    }
    Ok(best)
}
