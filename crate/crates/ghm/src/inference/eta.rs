//! Banded Cholesky sampling of the `l`-dependent multiplier process.
//!
//! The Toeplitz covariance `Sigma[t][s] = a((t-s)/l)` vanishes at lags
//! `>= l` for kernels supported on `[-1, 1]`, so its Cholesky factor is
//! lower-banded with bandwidth `l - 1` and `L L' = Sigma` holds with the
//! band structure intact: draws are exactly `l`-dependent, not just
//! approximately.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_domain, Error, Result};

use super::MultiplierKernel;

/// Lower-banded Cholesky factor of the multiplier covariance.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    t_len: usize,
    /// Bandwidth: entries `L[i][j]` with `i - b <= j <= i` may be nonzero.
    band: usize,
    /// Row-packed band: `rows[i][k] = L[i][i - width(i) + k]` for the
    /// `width(i) = min(i, band) + 1` stored entries of row `i`.
    rows: Vec<Vec<f64>>,
}

impl BandedCholesky {
    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn bandwidth(&self) -> usize {
        self.band
    }

    /// `L[i][j]`, zero outside the band.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if j > i || i - j > self.band {
            return 0.0;
        }
        let start = i - i.min(self.band);
        self.rows[i][j - start]
    }

    /// Max-norm reconstruction error `||L L' - Sigma||_max`.
    pub fn reconstruction_error(&self, kernel: MultiplierKernel, ell: usize) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.t_len {
            for j in i.saturating_sub(self.band + 1)..=i {
                let mut v = 0.0;
                for k in 0..=j {
                    v += self.entry(i, k) * self.entry(j, k);
                }
                let target = kernel.weight((i - j) as f64 / ell as f64);
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    /// One multiplier vector `eta = L g`, `g` standard normal.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let g: Vec<f64> = (0..self.t_len)
            .map(|_| rand_distr::Distribution::sample(&StandardNormal, rng))
            .collect();
        let mut eta = Vec::with_capacity(self.t_len);
        for i in 0..self.t_len {
            let start = i - i.min(self.band);
            let row = &self.rows[i];
            let mut v = 0.0;
            for (k, l) in row.iter().enumerate() {
                v += l * g[start + k];
            }
            eta.push(v);
        }
        eta
    }
}

/// Banded Cholesky of `Sigma[t][s] = a((t-s)/l)`.
///
/// Rejects covariances that fail positive definiteness numerically; the
/// built-in Bartlett and Parzen kernels always pass.
pub fn banded_cholesky(t_len: usize, ell: usize, kernel: MultiplierKernel) -> Result<BandedCholesky> {
    ensure_domain(t_len >= 1, "need at least one time point")?;
    ensure_domain(ell >= 1, "ell must be >= 1")?;
    let band = (ell - 1).min(t_len - 1);
    let cov: Vec<f64> = (0..=band)
        .map(|lag| kernel.weight(lag as f64 / ell as f64))
        .collect();

    let mut rows: Vec<Vec<f64>> = (0..t_len)
        .map(|i| vec![0.0; i.min(band) + 1])
        .collect();
    for i in 0..t_len {
        let start_i = i - i.min(band);
        for j in start_i..=i {
            let start_j = j - j.min(band);
            let mut s = cov[i - j];
            // Sum over the overlapping support of rows i and j.
            for k in start_i.max(start_j)..j {
                s -= rows[i][k - start_i] * rows[j][k - start_j];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::NotPositiveDefinite(format!(
                        "multiplier covariance pivot {s} at index {i}"
                    )));
                }
                rows[i][j - start_i] = s.sqrt();
            } else {
                rows[i][j - start_i] = s / rows[j][j - start_j];
            }
        }
    }
    Ok(BandedCholesky { t_len, band, rows })
}

/// Draw one `l`-dependent multiplier vector of length `t_len`.
///
/// Convenience form of [`banded_cholesky`] + [`BandedCholesky::sample`];
/// repeated draws should factor once and reuse it.
pub fn draw_eta<R: Rng + ?Sized>(
    t_len: usize,
    ell: usize,
    kernel: MultiplierKernel,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(banded_cholesky(t_len, ell, kernel)?.sample(rng))
}
