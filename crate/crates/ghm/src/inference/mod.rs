//! `l`-dependent multiplier bootstrap for the index parameter.
//!
//! Step 1 draws Gaussian multipliers `eta` with `E[eta_t] = 0`,
//! `E[eta_t^2] = 1` and `Cov(eta_t, eta_s) = a((t-s)/l)` for a compactly
//! supported kernel `a`; the covariance is banded, so a banded Cholesky
//! factor generates exact draws. Step 2 rebuilds responses
//! `y*_t = fitted_t + resid_t * eta_t` on in-region observations and
//! refits, warm-started at the original estimate. Percentile intervals of
//! the refit deviations, centered at the estimate, form the confidence
//! intervals.

mod eta;

pub use eta::{banded_cholesky, draw_eta, BandedCholesky};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_domain, Error, Result};
use crate::estimator::{fit, index_values, Dataset, FitOptions, HierarchicalFit, ThetaParam};

/// Multiplier covariance kernels admissible for the bootstrap (symmetric,
/// `a(0) = 1`, non-negative Fourier transform, support `[-1, 1]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiplierKernel {
    Bartlett,
    Parzen,
}

impl MultiplierKernel {
    pub fn weight(self, x: f64) -> f64 {
        match self {
            MultiplierKernel::Bartlett => bartlett(x),
            MultiplierKernel::Parzen => parzen(x),
        }
    }
}

impl std::str::FromStr for MultiplierKernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bartlett" => Ok(MultiplierKernel::Bartlett),
            "parzen" => Ok(MultiplierKernel::Parzen),
            other => Err(Error::InvalidConfig(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Bartlett kernel `(1 - |x|) 1{|x| <= 1}`.
pub fn bartlett(x: f64) -> f64 {
    (1.0 - x.abs()).max(0.0)
}

/// Parzen kernel.
pub fn parzen(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 0.5 {
        1.0 - 6.0 * ax * ax + 6.0 * ax * ax * ax
    } else if ax <= 1.0 {
        2.0 * (1.0 - ax).powi(3)
    } else {
        0.0
    }
}

/// Dependence length rule `l = floor(1.75 T^{1/3})`, at least 1.
pub fn block_length(t_len: usize) -> usize {
    let l = (1.75 * (t_len as f64).cbrt()).floor() as usize;
    l.max(1)
}

/// Bootstrap settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Replications.
    pub reps: usize,
    pub kernel: MultiplierKernel,
    /// Dependence length; `None` applies [`block_length`].
    pub ell: Option<usize>,
    /// Confidence level in (0, 1).
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            reps: 100,
            kernel: MultiplierKernel::Bartlett,
            ell: None,
            level: 0.95,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_domain(self.reps >= 2, "bootstrap needs at least 2 replications")?;
        ensure_domain(
            self.level > 0.0 && self.level < 1.0,
            "level must be in (0, 1)",
        )?;
        if let Some(l) = self.ell {
            ensure_domain(l >= 1, "ell must be >= 1")?;
        }
        Ok(())
    }

    pub fn resolve_ell(&self, t_len: usize) -> usize {
        self.ell.unwrap_or_else(|| block_length(t_len))
    }
}

/// Bootstrap draws and per-coordinate percentile intervals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Successful draws, one flattened `theta*` per row, in replication
    /// order.
    pub theta_draws: Vec<Vec<f64>>,
    /// Per-coordinate interval `theta_hat + [q_{a/2}, q_{1-a/2}]` of the
    /// draw deviations.
    pub ci: Vec<(f64, f64)>,
    /// The estimate the intervals are centered on.
    pub theta_hat: Vec<f64>,
    pub failed: usize,
    pub settings: BootstrapSettings,
}

/// Echo of the settings a result was produced under.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapSettings {
    pub reps: usize,
    pub kernel: MultiplierKernel,
    pub ell: usize,
    pub level: f64,
    pub seed: u64,
}

impl BootstrapResult {
    /// Deviation interval `[q_{a/2}, q_{1-a/2}]` of `theta* - theta_hat`
    /// for coordinate `s`; the interval the coverage indicator checks
    /// `theta_hat - theta_star` against.
    pub fn deviation_ci(&self, s: usize) -> (f64, f64) {
        let (lo, hi) = self.ci[s];
        (lo - self.theta_hat[s], hi - self.theta_hat[s])
    }
}

/// Linear-interpolation quantile of pre-sorted values.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// The three-step multiplier bootstrap for `theta`.
///
/// Out-of-region observations keep their original response (`resid := 0`
/// there). Each replication refits warm-started at `theta_hat` with a
/// single start; failed refits are recorded and excluded, and more than
/// 20% failures aborts.
pub fn bootstrap_theta(
    data: &Dataset,
    fit_result: &HierarchicalFit,
    config: &BootstrapConfig,
) -> Result<BootstrapResult> {
    config.validate()?;
    let t_len = data.len();
    let ell = config.resolve_ell(t_len);

    // In-region fitted values and residuals under the original estimate.
    let mut fitted = Vec::with_capacity(t_len);
    let mut resid = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let x = index_values(data.z_row(t), &fit_result.theta_hat)?;
        match fit_result.predict(&x) {
            Ok(v) => {
                fitted.push(v);
                resid.push(data.y()[t] - v);
            }
            Err(Error::OutOfRegion) => {
                fitted.push(data.y()[t]);
                resid.push(0.0);
            }
            Err(e) => return Err(e),
        }
    }

    let chol = banded_cholesky(t_len, ell, config.kernel)?;
    let warm = FitOptions {
        seed: config.seed,
        ..FitOptions::warm(&fit_result.theta_hat)
    };

    // Replications are independent given per-replication streams derived
    // as seed ^ index; results are assembled by index.
    let draws: Vec<Option<Vec<f64>>> = (0..config.reps)
        .into_par_iter()
        .map(|rep| {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed ^ rep as u64);
            let eta = chol.sample(&mut rng);
            let y_star: Vec<f64> = fitted
                .iter()
                .zip(&resid)
                .zip(&eta)
                .map(|((f, r), e)| f + r * e)
                .collect();
            let star_data = match data.with_y(y_star) {
                Ok(d) => d,
                Err(_) => return None,
            };
            fit(&star_data, &fit_result.config, &warm)
                .ok()
                .map(|f| f.theta_hat.flatten())
        })
        .collect();

    let failed = draws.iter().filter(|d| d.is_none()).count();
    if failed * 5 > config.reps {
        return Err(Error::TooManyBootstrapFailures {
            failed,
            total: config.reps,
        });
    }
    let theta_draws: Vec<Vec<f64>> = draws.into_iter().flatten().collect();
    let theta_hat = fit_result.theta_hat.flatten();
    let d = theta_hat.len();
    let alpha = 1.0 - config.level;
    let mut ci = Vec::with_capacity(d);
    for s in 0..d {
        let mut devs: Vec<f64> = theta_draws
            .iter()
            .map(|row| row[s] - theta_hat[s])
            .collect();
        devs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lo = quantile_sorted(&devs, alpha / 2.0);
        let hi = quantile_sorted(&devs, 1.0 - alpha / 2.0);
        ci.push((theta_hat[s] + lo, theta_hat[s] + hi));
    }
    Ok(BootstrapResult {
        theta_draws,
        ci,
        theta_hat,
        failed,
        settings: BootstrapSettings {
            reps: config.reps,
            kernel: config.kernel,
            ell,
            level: config.level,
            seed: config.seed,
        },
    })
}

/// Validate draws against the parameter constraints (unit block norms,
/// positive first entries).
pub fn draws_satisfy_constraints(result: &BootstrapResult, block_dims: &[usize]) -> bool {
    result
        .theta_draws
        .iter()
        .all(|row| ThetaParam::from_flat(row, block_dims).is_ok())
}
