//! Discrete Dirichlet Laplacians and their resolvents.
//!
//! Stacked vectors are component-major: component `c` occupies
//! `c*N..(c+1)*N`, where `N` is the number of interior grid nodes. In 2D the
//! node index is `ix + nx*iy`.
//!
//! An operator carries an accretivity constant `omega`: its action is
//! `v -> L v - omega v`, so that `omega I + A = L` is m-accretive. All
//! resolvents of nonzero-`omega` operators are routed through the scaling
//! identity `J^A_λ u = J^L_{λ/(1-λω)}(u/(1-λω))` onto cached factorizations of
//! `I + μL`.

use std::sync::{Arc, RwLock};

use rand::Rng;
use serde::Serialize;

use crate::banded::BandedCholesky;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::par::{map_indexed, stream_rng, Execution};

/// Uniform grid on an interval or rectangle with `components` unknowns per node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub dim: usize,
    pub extents: Vec<f64>,
    pub nodes: Vec<usize>,
    pub components: usize,
}

impl GridSpec {
    pub fn new(extents: Vec<f64>, nodes: Vec<usize>, components: usize) -> Result<Self> {
        let g = Self {
            dim: extents.len(),
            extents,
            nodes,
            components,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn one_d(length: f64, n: usize, components: usize) -> Result<Self> {
        Self::new(vec![length], vec![n], components)
    }

    pub fn two_d(lx: f64, ly: f64, nx: usize, ny: usize, components: usize) -> Result<Self> {
        Self::new(vec![lx, ly], vec![nx, ny], components)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {}", self.dim)));
        }
        if self.nodes.len() != self.dim {
            return Err(Error::InvalidGrid(format!(
                "{} node counts for a {}-dimensional grid",
                self.nodes.len(),
                self.dim
            )));
        }
        if let Some(e) = self.extents.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidGrid(format!("extent {e} is not positive")));
        }
        if self.nodes.contains(&0) {
            return Err(Error::InvalidGrid("node counts must be at least 1".into()));
        }
        if self.components == 0 {
            return Err(Error::InvalidGrid("at least one component is required".into()));
        }
        Ok(())
    }

    /// Interior nodes of the scalar grid.
    pub fn node_count(&self) -> usize {
        self.nodes.iter().product()
    }

    /// Length of stacked vectors, `M * node_count`.
    pub fn len(&self) -> usize {
        self.components * self.node_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / (self.nodes[axis] + 1) as f64
    }

    /// Physical coordinates of scalar node `idx`.
    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mut rest = idx;
        (0..self.dim)
            .map(|a| {
                let i = rest % self.nodes[a];
                rest /= self.nodes[a];
                (i + 1) as f64 * self.spacing(a)
            })
            .collect()
    }

    /// Closed-form eigenvalues of the scalar Dirichlet stencil, ascending.
    pub fn dirichlet_eigenvalues(&self) -> Vec<f64> {
        let axis: Vec<Vec<f64>> = (0..self.dim)
            .map(|a| {
                let n = self.nodes[a];
                let h = self.spacing(a);
                (1..=n)
                    .map(|k| 2.0 / (h * h) * (1.0 - (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos()))
                    .collect()
            })
            .collect();
        let mut out = axis[0].clone();
        for ax in axis.iter().skip(1) {
            out = out.iter().flat_map(|a| ax.iter().map(move |b| a + b)).collect();
        }
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }

    /// Closed-form principal eigenvalue of the scalar Dirichlet stencil.
    pub fn closed_form_lambda1(&self) -> f64 {
        (0..self.dim)
            .map(|a| {
                let h = self.spacing(a);
                2.0 / (h * h) * (1.0 - (std::f64::consts::PI / (self.nodes[a] + 1) as f64).cos())
            })
            .sum()
    }
}

/// Anything that acts linearly on stacked vectors.
pub trait LinearAction: Sync {
    fn dim(&self) -> usize;
    fn apply_into(&self, v: &[f64], out: &mut [f64]);

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(v, &mut out);
        out
    }
}

/// `c I` on vectors of length `dim`; handy as a control operator.
#[derive(Debug, Clone, Copy)]
pub struct ScaledIdentity {
    pub dim: usize,
    pub c: f64,
}

impl LinearAction for ScaledIdentity {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(v) {
            *o = self.c * x;
        }
    }
}

/// Principal eigenpair of the scalar block.
#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub lambda1: f64,
    pub phi: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Block Dirichlet Laplacian `-Δ_h ⊗ I_M`, optionally shifted by `-omega I`.
#[derive(Debug)]
pub struct DiscreteOperator {
    grid: GridSpec,
    omega: f64,
    inv_h2: Vec<f64>,
    cache: RwLock<Vec<(u64, Arc<BandedCholesky>)>>,
}

impl Clone for DiscreteOperator {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            omega: self.omega,
            inv_h2: self.inv_h2.clone(),
            cache: RwLock::new(self.cache.read().unwrap().clone()),
        }
    }
}

/// Builds the Dirichlet Laplacian on `grid` (accretivity constant 0).
pub fn laplacian_dirichlet(grid: &GridSpec) -> Result<DiscreteOperator> {
    DiscreteOperator::laplacian(grid.clone())
}

impl DiscreteOperator {
    pub fn laplacian(grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        let inv_h2 = (0..grid.dim).map(|a| 1.0 / grid.spacing(a).powi(2)).collect();
        Ok(Self {
            grid,
            omega: 0.0,
            inv_h2,
            cache: RwLock::new(Vec::new()),
        })
    }

    /// Same stencil with action `L - omega I`.
    pub fn with_omega(&self, omega: f64) -> Self {
        let mut op = self.clone();
        op.omega = omega;
        op
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn components(&self) -> usize {
        self.grid.components
    }

    pub fn nodes(&self) -> usize {
        self.grid.node_count()
    }

    fn bandwidth(&self) -> usize {
        if self.grid.dim == 1 {
            1
        } else {
            self.grid.nodes[0]
        }
    }

    /// Lower-band entry `(i, j)`, `j <= i`, of `diag + scale * L` on the scalar grid.
    fn scalar_entry(&self, i: usize, j: usize, diag: f64, scale: f64) -> f64 {
        if i == j {
            return diag + scale * 2.0 * self.inv_h2.iter().sum::<f64>();
        }
        let nx = self.grid.nodes[0];
        let d = i - j;
        if d == 1 && (self.grid.dim == 1 || !i.is_multiple_of(nx)) {
            return -scale * self.inv_h2[0];
        }
        if self.grid.dim == 2 && d == nx {
            return -scale * self.inv_h2[1];
        }
        0.0
    }

    /// Scalar stencil action `out = L v` on one component block.
    pub fn apply_scalar(&self, v: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let nx = g.nodes[0];
        if g.dim == 1 {
            let c = self.inv_h2[0];
            for i in 0..nx {
                let l = if i > 0 { v[i - 1] } else { 0.0 };
                let r = if i + 1 < nx { v[i + 1] } else { 0.0 };
                out[i] = c * (2.0 * v[i] - l - r);
            }
        } else {
            let ny = g.nodes[1];
            let (cx, cy) = (self.inv_h2[0], self.inv_h2[1]);
            for iy in 0..ny {
                for ix in 0..nx {
                    let i = ix + nx * iy;
                    let l = if ix > 0 { v[i - 1] } else { 0.0 };
                    let r = if ix + 1 < nx { v[i + 1] } else { 0.0 };
                    let d = if iy > 0 { v[i - nx] } else { 0.0 };
                    let u = if iy + 1 < ny { v[i + nx] } else { 0.0 };
                    out[i] = cx * (2.0 * v[i] - l - r) + cy * (2.0 * v[i] - d - u);
                }
            }
        }
    }

    /// Infinity norm of the scalar stencil.
    pub fn scalar_norm_inf(&self) -> f64 {
        4.0 * self.inv_h2.iter().sum::<f64>()
    }

    fn factor_for(&self, mu: f64) -> Result<Arc<BandedCholesky>> {
        let key = mu.to_bits();
        if let Some((_, f)) = self.cache.read().unwrap().iter().find(|(k, _)| *k == key) {
            return Ok(f.clone());
        }
        let n = self.nodes();
        let f = Arc::new(BandedCholesky::factor(n, self.bandwidth(), |i, j| self.scalar_entry(i, j, 1.0, mu))?);
        let mut w = self.cache.write().unwrap();
        if let Some((_, existing)) = w.iter().find(|(k, _)| *k == key) {
            return Ok(existing.clone());
        }
        w.push((key, f.clone()));
        Ok(f)
    }

    /// Number of cached factorizations.
    pub fn cached_factorizations(&self) -> usize {
        self.cache.read().unwrap().len()
    }

    /// `(I + μL)^{-1} v` for the unshifted stencil with iterative refinement.
    fn base_resolvent(&self, mu: f64, v: &[f64]) -> Result<Vec<f64>> {
        if !(mu > 0.0) {
            return Err(Error::InvalidArgument(format!("resolvent step must be positive, got {mu}")));
        }
        let n = self.nodes();
        if v.len() != self.grid.len() {
            return Err(Error::Dimension {
                expected: self.grid.len(),
                got: v.len(),
            });
        }
        let f = self.factor_for(mu)?;
        let mut x = v.to_vec();
        let mut lx = vec![0.0; n];
        for c in 0..self.components() {
            let blk = c * n..(c + 1) * n;
            f.solve_in_place(&mut x[blk.clone()]);
            let vn = norm2(&v[blk.clone()]);
            for _ in 0..3 {
                self.apply_scalar(&x[blk.clone()], &mut lx);
                let mut r: Vec<f64> = (0..n).map(|i| v[c * n + i] - x[c * n + i] - mu * lx[i]).collect();
                if norm2(&r) <= 1e-12 * vn.max(f64::MIN_POSITIVE) {
                    break;
                }
                f.solve_in_place(&mut r);
                for i in 0..n {
                    x[c * n + i] += r[i];
                }
            }
        }
        Ok(x)
    }

    /// `J_λ v = (I + λA)^{-1} v`.
    pub fn resolvent(&self, lambda: f64, v: &[f64]) -> Result<Vec<f64>> {
        self.shifted_resolvent(0.0, lambda, v)
    }

    /// Resolvent of `A - omega I` (accretivity constant `self.omega + omega`).
    pub fn shifted_resolvent(&self, omega: f64, lambda: f64, v: &[f64]) -> Result<Vec<f64>> {
        let w = self.omega + omega;
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("λ must be positive, got {lambda}")));
        }
        if lambda * w >= 1.0 {
            return Err(Error::InvalidArgument(format!("λω = {} must be < 1", lambda * w)));
        }
        if w == 0.0 {
            return self.base_resolvent(lambda, v);
        }
        let s = 1.0 / (1.0 - lambda * w);
        let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
        self.base_resolvent(lambda * s, &scaled)
    }

    /// Principal eigenpair of the scalar block by inverse iteration from the
    /// all-ones vector.
    pub fn principal_eigenpair(&self) -> Result<EigenPair> {
        self.eigenpair_deflated(&[])
    }

    /// Inverse iteration orthogonal to `previous` (unit vectors).
    pub fn eigenpair_deflated(&self, previous: &[Vec<f64>]) -> Result<EigenPair> {
        let n = self.nodes();
        let f = BandedCholesky::factor(n, self.bandwidth(), |i, j| self.scalar_entry(i, j, 0.0, 1.0))?;
        let tol = 1e-10_f64.max(64.0 * f64::EPSILON * self.scalar_norm_inf());
        let mut x: Vec<f64> = if previous.is_empty() {
            vec![1.0; n]
        } else {
            (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect()
        };
        let project = |x: &mut Vec<f64>| {
            for p in previous {
                let c = dot(x, p);
                for (xi, pi) in x.iter_mut().zip(p) {
                    *xi -= c * pi;
                }
            }
        };
        project(&mut x);
        let nx = norm2(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let mut lx = vec![0.0; n];
        for it in 1..=20_000 {
            f.solve_in_place(&mut x);
            project(&mut x);
            let nx = norm2(&x);
            if !(nx > 0.0) {
                return Err(Error::NoConvergence("inverse iteration collapsed".into()));
            }
            x.iter_mut().for_each(|v| *v /= nx);
            self.apply_scalar(&x, &mut lx);
            let rq = dot(&x, &lx);
            let res = norm2(&lx.iter().zip(&x).map(|(a, b)| a - rq * b).collect::<Vec<_>>());
            if res <= tol {
                if previous.is_empty() && x.iter().sum::<f64>() < 0.0 {
                    x.iter_mut().for_each(|v| *v = -*v);
                }
                return Ok(EigenPair {
                    lambda1: rq,
                    phi: x,
                    residual: res,
                    iterations: it,
                });
            }
        }
        Err(Error::NoConvergence("inverse iteration hit its iteration cap".into()))
    }
}

impl LinearAction for DiscreteOperator {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.nodes();
        for c in 0..self.components() {
            self.apply_scalar(&v[c * n..(c + 1) * n], &mut out[c * n..(c + 1) * n]);
        }
        if self.omega != 0.0 {
            for (o, x) in out.iter_mut().zip(v) {
                *o -= self.omega * x;
            }
        }
    }
}

/// Free-function form of [`DiscreteOperator::resolvent`].
pub fn resolvent(op: &DiscreteOperator, lambda: f64, v: &[f64]) -> Result<Vec<f64>> {
    op.resolvent(lambda, v)
}

/// Free-function form of [`DiscreteOperator::shifted_resolvent`].
pub fn shifted_resolvent(op: &DiscreteOperator, omega: f64, lambda: f64, v: &[f64]) -> Result<Vec<f64>> {
    op.shifted_resolvent(omega, lambda, v)
}

/// Free-function form of [`DiscreteOperator::principal_eigenpair`].
pub fn principal_eigenpair(op: &DiscreteOperator) -> Result<EigenPair> {
    op.principal_eigenpair()
}

fn random_unit(len: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, index);
    let mut v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = norm2(&v).max(f64::MIN_POSITIVE);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Maximum discrepancy of `J_{l1} = J_{l2}(μ I + (1-μ) J_{l1})`, `μ = l2/l1`,
/// over `samples` random unit vectors.
pub fn resolvent_identity_check(op: &DiscreteOperator, l1: f64, l2: f64, samples: usize, seed: u64) -> Result<f64> {
    resolvent_identity_residual(op, l1, l2, l2, samples, seed)
}

/// As [`resolvent_identity_check`] but with the outer resolvent on the
/// right-hand side taken at `rhs_l2`. Passing `rhs_l2 != l2` gives a
/// corrupted identity.
pub fn resolvent_identity_residual(
    op: &DiscreteOperator,
    l1: f64,
    l2: f64,
    rhs_l2: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(l1 > 0.0 && l2 > 0.0) {
        return Err(Error::InvalidArgument("resolvent steps must be positive".into()));
    }
    let len = op.grid().len();
    let res = map_indexed(samples, Execution::Auto, |s| -> Result<f64> {
        let v = random_unit(len, seed, s as u64);
        let lhs = op.resolvent(l1, &v)?;
        let mu = l2 / l1;
        let inner: Vec<f64> = v.iter().zip(&lhs).map(|(a, b)| mu * a + (1.0 - mu) * b).collect();
        let rhs = op.resolvent(rhs_l2, &inner)?;
        Ok(norm2(&lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>()))
    });
    res.into_iter().try_fold(0.0_f64, |m, r| r.map(|x| m.max(x)))
}

/// Maximum discrepancy between the shifted resolvent computed through the
/// scaling identity and a direct factorization of `I + λ(L - ωI)`.
pub fn shift_identity_check(op: &DiscreteOperator, omega: f64, lambda: f64, samples: usize, seed: u64) -> Result<f64> {
    let w = op.omega() + omega;
    let n = op.nodes();
    let direct = BandedCholesky::factor(n, op.bandwidth(), |i, j| {
        op.scalar_entry(i, j, 1.0 - lambda * w, lambda)
    })?;
    let len = op.grid().len();
    let res = map_indexed(samples, Execution::Auto, |s| -> Result<f64> {
        let v = random_unit(len, seed, s as u64);
        let via = op.shifted_resolvent(omega, lambda, &v)?;
        let mut d = v.clone();
        for c in 0..op.components() {
            direct.solve_in_place(&mut d[c * n..(c + 1) * n]);
        }
        Ok(norm2(&via.iter().zip(&d).map(|(a, b)| a - b).collect::<Vec<_>>()))
    });
    res.into_iter().try_fold(0.0_f64, |m, r| r.map(|x| m.max(x)))
}

/// Minimum of `<Au, u>` over `samples` random unit vectors.
pub fn accretivity_check<A: LinearAction + ?Sized>(op: &A, samples: usize, seed: u64) -> f64 {
    let len = op.dim();
    map_indexed(samples, Execution::Auto, |s| {
        let u = random_unit(len, seed, s as u64);
        dot(&op.apply(&u), &u)
    })
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}
