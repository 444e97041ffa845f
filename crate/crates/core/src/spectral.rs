//! Spectral quantities of small reaction matrices and the existence
//! certificate built from them.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest matrix handled by the dense routines here.
pub const MAX_DIM: usize = 12;

/// Minimal gap between `λ₁` and any `σ₊` element for a decision.
pub const EXCLUSION_TOL: f64 = 1e-8;

/// Linearizations of the reaction at 0 and infinity, and of `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionMatrices {
    pub d0: DMatrix<f64>,
    pub dinf: DMatrix<f64>,
    pub r0: DMatrix<f64>,
    pub rinf: DMatrix<f64>,
}

impl ReactionMatrices {
    /// `R₀ = R∞ = I`.
    pub fn with_identity_diffusion(d0: DMatrix<f64>, dinf: DMatrix<f64>) -> Self {
        let m = d0.nrows();
        Self {
            d0,
            dinf,
            r0: DMatrix::identity(m, m),
            rinf: DMatrix::identity(m, m),
        }
    }

    pub fn scalar(d0: f64, dinf: f64, r0: f64, rinf: f64) -> Self {
        let s = |x| DMatrix::from_element(1, 1, x);
        Self {
            d0: s(d0),
            dinf: s(dinf),
            r0: s(r0),
            rinf: s(rinf),
        }
    }

    pub fn dim(&self) -> usize {
        self.d0.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.d0.nrows();
        for (name, a) in [("D0", &self.d0), ("Dinf", &self.dinf), ("R0", &self.r0), ("Rinf", &self.rinf)] {
            if a.nrows() != m || a.ncols() != m {
                return Err(Error::InvalidArgument(format!(
                    "{name} is {}x{}, expected {m}x{m}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} has non-finite entries")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    DegreeJumpExists,
    NoJump,
    Inconclusive,
}

/// Outcome of the spectral comparison at zero and at infinity.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralCertificate {
    pub lambda1: f64,
    pub sigma_plus_0: Vec<f64>,
    pub sigma_plus_inf: Vec<f64>,
    pub s0: f64,
    pub sinf: f64,
    pub excluded_at_zero: bool,
    pub excluded_at_infinity: bool,
    pub quasi_nonnegative_0: bool,
    pub quasi_nonnegative_inf: bool,
    pub cond_r0: f64,
    pub cond_rinf: f64,
    /// Distance from `λ₁` to the nearest element of either `σ₊` set or
    /// either abscissa; perturbations of `λ₁` below half of it keep the verdict.
    pub margin: f64,
    pub verdict: Verdict,
    pub pairing_note: String,
}

pub fn is_quasi_nonnegative(d: &DMatrix<f64>) -> bool {
    (0..d.nrows()).all(|i| (0..d.ncols()).all(|j| i == j || d[(i, j)] >= -1e-14))
}

fn check_square(d: &DMatrix<f64>) -> Result<()> {
    if d.nrows() != d.ncols() {
        return Err(Error::InvalidArgument(format!("matrix is {}x{}, not square", d.nrows(), d.ncols())));
    }
    if d.nrows() > MAX_DIM {
        return Err(Error::Unsupported(format!("dense spectral routines cap M at {MAX_DIM}, got {}", d.nrows())));
    }
    if d.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigen("matrix has non-finite entries".into()));
    }
    Ok(())
}

fn eigenvalues(d: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    check_square(d)?;
    if d.nrows() == 0 {
        return Ok(Vec::new());
    }
    let ev = d.clone().complex_eigenvalues();
    let out: Vec<(f64, f64)> = ev.iter().map(|c| (c.re, c.im)).collect();
    if out.iter().any(|(r, i)| !r.is_finite() || !i.is_finite()) {
        return Err(Error::Eigen("Schur iteration produced non-finite eigenvalues".into()));
    }
    Ok(out)
}

/// `s(D) = max Re σ(D)`.
pub fn spectral_abscissa(d: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(d)?.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max))
}

/// Real eigenvalues admitting a nonzero nonnegative eigenvector, ascending.
pub fn sigma_plus(d: &DMatrix<f64>) -> Result<Vec<f64>> {
    let ev = eigenvalues(d)?;
    let scale = d.norm().max(1.0);
    let mut reals: Vec<f64> = ev
        .iter()
        .filter(|(_, im)| im.abs() <= 1e-9 * scale)
        .map(|(re, _)| *re)
        .collect();
    reals.sort_by(|a, b| a.total_cmp(b));
    // Defective eigenvalues split by O(sqrt(eps)); merge them.
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for r in reals {
        match clusters.last_mut() {
            Some(c) if (r - c[c.len() - 1]).abs() <= 1e-6 * scale => c.push(r),
            _ => clusters.push(vec![r]),
        }
    }
    let mut out = Vec::new();
    for c in clusters {
        let lambda = c.iter().sum::<f64>() / c.len() as f64;
        let basis = eigenspace(d, lambda, scale);
        if nonnegative_in_span(&basis) {
            out.push(lambda);
        }
    }
    Ok(out)
}

/// Orthonormal basis (columns) of `ker(D - λI)`, with rank tolerance
/// `1e-9‖D‖`. The smallest right singular vector is always kept.
fn eigenspace(d: &DMatrix<f64>, lambda: f64, scale: f64) -> DMatrix<f64> {
    let m = d.nrows();
    let shifted = d - DMatrix::identity(m, m) * lambda;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let sv = &svd.singular_values;
    let tol = 1e-9 * scale;
    let mut cols: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= tol).collect();
    if cols.is_empty() {
        let imin = (0..sv.len()).min_by(|&a, &b| sv[a].total_cmp(&sv[b])).unwrap();
        cols.push(imin);
    }
    DMatrix::from_fn(m, cols.len(), |i, j| vt[(cols[j], i)])
}

/// Is there `c` with `B c >= 0` and `Σ (B c)_i = 1`? Decided by visiting the
/// vertices of that polyhedron: `k-1` tight inequalities plus the equality.
fn nonnegative_in_span(b: &DMatrix<f64>) -> bool {
    let (m, k) = (b.nrows(), b.ncols());
    let colsum: Vec<f64> = (0..k).map(|j| b.column(j).sum()).collect();
    let tol = 1e-9;
    let mut subset: Vec<usize> = (0..k.saturating_sub(1)).collect();
    loop {
        let mut sys = DMatrix::zeros(k, k);
        let mut rhs = DVector::zeros(k);
        for j in 0..k {
            sys[(0, j)] = colsum[j];
        }
        rhs[0] = 1.0;
        for (r, &i) in subset.iter().enumerate() {
            for j in 0..k {
                sys[(r + 1, j)] = b[(i, j)];
            }
        }
        if let Some(c) = sys.lu().solve(&rhs) {
            let x = b * c;
            if x.iter().all(|v| v.is_finite() && *v >= -tol) {
                return true;
            }
        }
        // next (k-1)-subset of 0..m in lexicographic order
        let len = subset.len();
        let mut i = len;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if subset[i] < m - len + i {
                subset[i] += 1;
                for t in i + 1..len {
                    subset[t] = subset[t - 1] + 1;
                }
                break;
            }
        }
        if len == 0 {
            return false;
        }
    }
}

fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn invert(a: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    if condition_number(a) > 1e12 {
        return Err(Error::Singular(format!("{name} is singular or ill-conditioned")));
    }
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{name} is not invertible")))
}

/// `D₀R₀⁻¹` and `D∞R∞⁻¹`.
pub fn effective_matrices(mats: &ReactionMatrices) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    mats.validate()?;
    Ok((&mats.d0 * invert(&mats.r0, "R0")?, &mats.dinf * invert(&mats.rinf, "Rinf")?))
}

fn gap(set: &[f64], x: f64) -> f64 {
    set.iter().map(|s| (s - x).abs()).fold(f64::INFINITY, f64::min)
}

/// Compares `λ₁` with `σ₊` and `s` of the effective matrices at zero and at
/// infinity.
pub fn certificate(mats: &ReactionMatrices, lambda1: f64) -> Result<SpectralCertificate> {
    let (g0, ginf) = effective_matrices(mats)?;
    let sp0 = sigma_plus(&g0)?;
    let spi = sigma_plus(&ginf)?;
    let s0 = spectral_abscissa(&g0)?;
    let sinf = spectral_abscissa(&ginf)?;
    let ex0 = gap(&sp0, lambda1) > EXCLUSION_TOL;
    let exi = gap(&spi, lambda1) > EXCLUSION_TOL;
    let product = (s0 - lambda1) * (sinf - lambda1);
    let verdict = if !(ex0 && exi) {
        Verdict::Inconclusive
    } else if product < 0.0 {
        Verdict::DegreeJumpExists
    } else if product > 0.0 {
        Verdict::NoJump
    } else {
        Verdict::Inconclusive
    };
    let margin = gap(&sp0, lambda1)
        .min(gap(&spi, lambda1))
        .min((s0 - lambda1).abs())
        .min((sinf - lambda1).abs());
    Ok(SpectralCertificate {
        lambda1,
        sigma_plus_0: sp0,
        sigma_plus_inf: spi,
        s0,
        sinf,
        excluded_at_zero: ex0,
        excluded_at_infinity: exi,
        quasi_nonnegative_0: is_quasi_nonnegative(&g0),
        quasi_nonnegative_inf: is_quasi_nonnegative(&ginf),
        cond_r0: condition_number(&mats.r0),
        cond_rinf: condition_number(&mats.rinf),
        margin,
        verdict,
        pairing_note: "case split at zero uses s(D0 R0^-1), at infinity s(Dinf Rinf^-1)".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(a: [f64; 4]) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &a)
    }

    #[test]
    fn quasi_nonnegativity() {
        assert!(is_quasi_nonnegative(&m2([-1.0, 2.0, 0.5, -3.0])));
        assert!(!is_quasi_nonnegative(&m2([1.0, -0.1, 0.0, 1.0])));
        assert!(is_quasi_nonnegative(&DMatrix::from_diagonal(&DVector::from_vec(vec![-4.0, 1.0, 7.0]))));
    }

    #[test]
    fn sigma_plus_examples() {
        assert_eq!(sigma_plus(&m2([3.0, 0.0, 0.0, -1.0])).unwrap(), vec![-1.0, 3.0]);
        let sp = sigma_plus(&m2([0.0, 1.0, 1.0, 0.0])).unwrap();
        assert_eq!(sp.len(), 1);
        assert!((sp[0] - 1.0).abs() < 1e-12);
        assert!(sigma_plus(&m2([0.0, -1.0, 1.0, 0.0])).unwrap().is_empty());
    }

    #[test]
    fn repeated_and_defective_eigenvalues() {
        // 2-dimensional eigenspace containing e1 and e2
        assert_eq!(sigma_plus(&m2([2.0, 0.0, 0.0, 2.0])).unwrap(), vec![2.0]);
        // Jordan block: eigenvector e1
        let sp = sigma_plus(&m2([1.0, 1.0, 0.0, 1.0])).unwrap();
        assert_eq!(sp.len(), 1);
        assert!((sp[0] - 1.0).abs() < 1e-6);
        // 3D eigenspace spanned by vectors with mixed signs that still
        // contains a nonnegative vector
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 5.0, 5.0, -1.0]));
        assert_eq!(sigma_plus(&d).unwrap(), vec![-1.0, 5.0]);
    }

    #[test]
    fn abscissa_examples() {
        assert_eq!(spectral_abscissa(&m2([1.0, 0.0, 0.0, -5.0])).unwrap(), 1.0);
        assert!(spectral_abscissa(&m2([0.0, -1.0, 1.0, 0.0])).unwrap().abs() < 1e-14);
    }

    #[test]
    fn certificate_examples() {
        let l1 = 8.0;
        let c = certificate(&ReactionMatrices::scalar(2.0 * l1, 0.0, 1.0, 1.0), l1).unwrap();
        assert_eq!(c.verdict, Verdict::DegreeJumpExists);
        let c = certificate(&ReactionMatrices::scalar(0.0, 0.0, 1.0, 1.0), l1).unwrap();
        assert_eq!(c.verdict, Verdict::NoJump);
        let c = certificate(&ReactionMatrices::scalar(3.0 * l1, 0.0, 3.0, 1.0), l1).unwrap();
        assert_eq!(c.verdict, Verdict::Inconclusive);
        assert!(!c.excluded_at_zero);
        assert!(certificate(&ReactionMatrices::scalar(1.0, 0.0, 0.0, 1.0), l1).is_err());
    }

    #[test]
    fn dimension_cap() {
        assert!(matches!(sigma_plus(&DMatrix::identity(13, 13)), Err(Error::Unsupported(_))));
    }
}
