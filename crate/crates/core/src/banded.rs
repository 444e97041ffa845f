//! Banded Cholesky factorization for symmetric positive definite systems.

use crate::error::{Error, Result};

/// Lower-triangular banded factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    // row i holds L[i][i-bw..=i]; entry (i, j) lives at i*(bw+1) + (j + bw - i)
    data: Vec<f64>,
}

impl BandedCholesky {
    /// Factors the SPD matrix whose lower band is given by `entry(i, j)` for
    /// `i - bw <= j <= i`.
    pub fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let w = bw + 1;
        let mut data = vec![0.0; n * w];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut sum = entry(i, j);
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    sum -= data[i * w + (k + bw - i)] * data[j * w + (k + bw - j)];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::Singular(format!("non-positive pivot {sum:e} at row {i}")));
                    }
                    data[i * w + bw] = sum.sqrt();
                } else {
                    data[i * w + (j + bw - i)] = sum / data[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.data[i * w + (k + bw - i)] * b[k];
            }
            b[i] = s / self.data[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s -= self.data[k * w + (i + bw - k)] * b[k];
            }
            b[i] = s / self.data[i * w + bw];
        }
    }
}
