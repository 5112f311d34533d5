//! Rolling-window one-step-ahead forecast evaluation.
//!
//! Each dataset row pairs a response with the predictors used to forecast
//! it, so forecasting row `t` from a window `[t - w, t)` evaluates the
//! freshly fitted model at row `t`'s own regressors. Out-of-region or
//! empty-cube test points fall back to the nearest occupied cube's
//! constant term and are flagged.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_domain, Error, Result};
use crate::estimator::{fit, index_values, Dataset, FitOptions, ModelConfig};
use crate::relu_nets::basis_len;

/// One evaluated test point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub t: usize,
    pub actual: f64,
    pub forecast: f64,
    pub fallback: bool,
}

/// Forecast evaluation over the rolling test set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RollingReport {
    /// Root mean squared forecast error over evaluated points.
    pub rmse: f64,
    /// Sign agreement `#(forecast * actual > 0) / #test`.
    pub cs: f64,
    pub window: usize,
    pub evaluated: usize,
    pub failed_windows: usize,
    pub fallbacks: usize,
    pub points: Vec<ForecastPoint>,
}

/// Fit on each window `[t - window, t)` and forecast row `t`, for
/// `t = window..T`. Window fits warm-start from the previous window's
/// estimate. More than 20% failed windows aborts.
pub fn rolling_forecast(
    data: &Dataset,
    config: &ModelConfig,
    window: usize,
    opts: &FitOptions,
) -> Result<RollingReport> {
    config.validate()?;
    let needed = config.d().max(basis_len(config.r, config.vartheta)) + 2;
    ensure_domain(
        window >= needed,
        format!("window {window} too small for fitting; need at least {needed}"),
    )?;
    ensure_domain(window < data.len(), "window must be smaller than the sample")?;

    let mut points = Vec::new();
    let mut failed_windows = 0usize;
    let mut fallbacks = 0usize;
    let mut warm: Option<crate::estimator::ThetaParam> = None;
    let total = data.len() - window;
    for t in window..data.len() {
        let train = data.window(t - window, t)?;
        let mut w_opts = FitOptions {
            seed: opts.seed ^ t as u64,
            ..opts.clone()
        };
        if let Some(prev) = &warm {
            w_opts.extra_starts.push(prev.clone());
        }
        match fit(&train, config, &w_opts) {
            Ok(fitted) => {
                let x = index_values(data.z_row(t), &fitted.theta_hat)?;
                let (forecast, fell_back) = fitted.predict_with_fallback(&x)?;
                fallbacks += usize::from(fell_back);
                points.push(ForecastPoint {
                    t,
                    actual: data.y()[t],
                    forecast,
                    fallback: fell_back,
                });
                warm = Some(fitted.theta_hat);
            }
            Err(_) => {
                failed_windows += 1;
            }
        }
    }
    if failed_windows * 5 > total {
        return Err(Error::Numerical(format!(
            "{failed_windows} of {total} window fits failed"
        )));
    }
    if points.is_empty() {
        return Err(Error::Numerical("no test points evaluated".into()));
    }
    let n = points.len() as f64;
    let sse: f64 = points
        .iter()
        .map(|p| (p.forecast - p.actual) * (p.forecast - p.actual))
        .sum();
    let signs = points
        .iter()
        .filter(|p| p.forecast * p.actual > 0.0)
        .count();
    Ok(RollingReport {
        rmse: (sse / n).sqrt(),
        cs: signs as f64 / n,
        window,
        evaluated: points.len(),
        failed_windows,
        fallbacks,
        points,
    })
}

/// Recompute RMSE and CS from evaluated points (used by tests and the
/// CLI to verify emitted reports).
pub fn scores_from_points(points: &[ForecastPoint]) -> (f64, f64) {
    let n = points.len() as f64;
    let sse: f64 = points
        .iter()
        .map(|p| (p.forecast - p.actual) * (p.forecast - p.actual))
        .sum();
    let signs = points
        .iter()
        .filter(|p| p.forecast * p.actual > 0.0)
        .count();
    ((sse / n).sqrt(), signs as f64 / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_forecasts_score_zero_rmse_and_count_signs() {
        let points: Vec<ForecastPoint> = [1.0, -2.0, 3.0, 0.0]
            .iter()
            .enumerate()
            .map(|(t, &y)| ForecastPoint {
                t,
                actual: y,
                forecast: y,
                fallback: false,
            })
            .collect();
        let (rmse, cs) = scores_from_points(&points);
        assert_eq!(rmse, 0.0);
        // The zero actual cannot produce a positive product.
        assert_eq!(cs, 0.75);
    }

    #[test]
    fn sign_flipped_forecasts_score_zero_cs() {
        let points: Vec<ForecastPoint> = [1.0, -2.0, 3.0]
            .iter()
            .enumerate()
            .map(|(t, &y)| ForecastPoint {
                t,
                actual: y,
                forecast: -y,
                fallback: false,
            })
            .collect();
        let (_, cs) = scores_from_points(&points);
        assert_eq!(cs, 0.0);
    }

    #[test]
    fn window_bounds_are_validated() {
        use crate::relu_nets::Activation;
        let config = ModelConfig {
            r: 2,
            block_dims: vec![2, 2],
            a: 0.9,
            vartheta: 2,
            m: 5,
            cubes_per_axis: Some(2),
            activation: Activation::Relu,
        };
        let data = Dataset::new(
            vec![0.0; 10],
            (0..10).map(|_| vec![0.1, 0.1, 0.1, 0.1]).collect(),
        )
        .unwrap();
        let opts = FitOptions::default();
        assert!(rolling_forecast(&data, &config, 3, &opts).is_err());
        assert!(rolling_forecast(&data, &config, 10, &opts).is_err());
    }
}
