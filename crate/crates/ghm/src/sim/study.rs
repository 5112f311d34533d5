//! Monte Carlo study harness: replications, metrics, and per-replication
//! records that reproduce the summary exactly.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::estimator::{fit, FitOptions, ThetaParam};
use crate::inference::{bootstrap_theta, BootstrapConfig};
use crate::io::{fmt_float, parse_float};

use super::design::{eval_grid, simulate, true_f, true_theta, SimDesign};

// Stream separators so simulation, fit starts, and bootstrap draws never
// share a seed within a replication.
const FIT_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
const BOOT_STREAM: u64 = 0xd1b5_4a32_d192_ed03;

/// One successful replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    /// Flattened estimate.
    pub theta_hat: Vec<f64>,
    /// Predictions on the diagonal evaluation grid.
    pub f_hat: Vec<f64>,
    /// Grid predictions that fell back to a nearest occupied cube.
    pub fallbacks: usize,
    /// Deviation intervals per coordinate when the bootstrap ran.
    pub ci_dev: Option<Vec<(f64, f64)>>,
    /// Failed bootstrap refits within the replication.
    pub boot_failed: usize,
}

/// Aggregated study metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rmse_theta: f64,
    pub rmse_f: f64,
    /// Present when the bootstrap ran.
    pub cr_theta: Option<f64>,
    pub bias_theta: f64,
    pub std_theta: f64,
    pub bias_f: f64,
    pub std_f: f64,
    pub reps_used: usize,
    pub reps_failed: usize,
}

/// Full study output: summary, per-replication records, and the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyReport {
    pub design: SimDesign,
    pub metrics: MetricsReport,
    pub grid: Vec<Vec<f64>>,
    pub records: Vec<RepRecord>,
}

/// Run the Monte Carlo study: per replication simulate, fit, optionally
/// bootstrap, and predict on the diagonal grid. Replications run
/// concurrently on streams `seed ^ rep`; more than 20% replication
/// failures aborts.
///
/// Grid predictions in never-occupied cubes fall back to the nearest
/// occupied cube's constant term and are counted per replication.
pub fn run_study(
    design: &SimDesign,
    fit_opts: &FitOptions,
    bootstrap: Option<&BootstrapConfig>,
) -> Result<StudyReport> {
    design.validate()?;
    let config = design.to_model_config();
    let grid = eval_grid(design.a, design.r, design.grid_points);

    let outcomes: Vec<Result<RepRecord>> = (0..design.reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = design.seed ^ rep as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(rep_seed);
            let data = simulate(design, &mut rng)?;
            let opts = FitOptions {
                seed: rep_seed ^ FIT_STREAM,
                ..fit_opts.clone()
            };
            let fitted = fit(&data, &config, &opts)?;
            let mut f_hat = Vec::with_capacity(grid.len());
            let mut fallbacks = 0usize;
            for x in &grid {
                let (v, fell_back) = fitted.predict_with_fallback(x)?;
                f_hat.push(v);
                fallbacks += usize::from(fell_back);
            }
            let (ci_dev, boot_failed) = match bootstrap {
                Some(bcfg) => {
                    let cfg = BootstrapConfig {
                        seed: rep_seed ^ BOOT_STREAM,
                        ..bcfg.clone()
                    };
                    let result = bootstrap_theta(&data, &fitted, &cfg)?;
                    let devs = (0..result.theta_hat.len())
                        .map(|s| result.deviation_ci(s))
                        .collect();
                    (Some(devs), result.failed)
                }
                None => (None, 0),
            };
            Ok(RepRecord {
                rep,
                theta_hat: fitted.theta_hat.flatten(),
                f_hat,
                fallbacks,
                ci_dev,
                boot_failed,
            })
        })
        .collect();

    let reps_failed = outcomes.iter().filter(|o| o.is_err()).count();
    if reps_failed * 5 > design.reps {
        return Err(Error::Numerical(format!(
            "{reps_failed} of {} replications failed",
            design.reps
        )));
    }
    let records: Vec<RepRecord> = outcomes.into_iter().flatten().collect();
    let metrics = compute_metrics(design, &grid, &records, reps_failed)?;
    Ok(StudyReport {
        design: design.clone(),
        metrics,
        grid,
        records,
    })
}

/// Metrics from per-replication records; the single path used both for
/// fresh studies and for recomputation from an emitted CSV.
pub fn compute_metrics(
    design: &SimDesign,
    grid: &[Vec<f64>],
    records: &[RepRecord],
    reps_failed: usize,
) -> Result<MetricsReport> {
    if records.is_empty() {
        return Err(Error::Numerical("no successful replications".into()));
    }
    let theta_star = true_theta(design.r, 2)?.flatten();
    let d = theta_star.len();
    let n = records.len() as f64;
    let f_star: Vec<f64> = grid.iter().map(|x| true_f(x, design.r)).collect();
    let n_grid = grid.len() as f64;

    let mut sum_err_sq = 0.0;
    let mut sum_err_norm = 0.0;
    let mut sum_f_sq = 0.0;
    let mut sum_f_abs = 0.0;
    for rec in records {
        ensure_dim(rec.theta_hat.len() == d, "record theta dimension mismatch")?;
        ensure_dim(rec.f_hat.len() == grid.len(), "record grid length mismatch")?;
        let err_sq: f64 = rec
            .theta_hat
            .iter()
            .zip(&theta_star)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        sum_err_sq += err_sq;
        sum_err_norm += err_sq.sqrt();
        for (fh, fs) in rec.f_hat.iter().zip(&f_star) {
            sum_f_sq += (fh - fs) * (fh - fs);
            sum_f_abs += (fh - fs).abs();
        }
    }
    let rmse_theta = (sum_err_sq / n).sqrt();
    let rmse_f = (sum_f_sq / (n * n_grid)).sqrt();
    let bias_theta = sum_err_norm / n / design.r as f64;
    let bias_f = sum_f_abs / (n * n_grid);

    // Dispersion around the Monte Carlo means.
    let mut theta_bar = vec![0.0; d];
    let mut f_bar = vec![0.0; grid.len()];
    for rec in records {
        for (acc, v) in theta_bar.iter_mut().zip(&rec.theta_hat) {
            *acc += v;
        }
        for (acc, v) in f_bar.iter_mut().zip(&rec.f_hat) {
            *acc += v;
        }
    }
    for v in &mut theta_bar {
        *v /= n;
    }
    for v in &mut f_bar {
        *v /= n;
    }
    let mut sum_dev_norm = 0.0;
    let mut sum_f_dev_abs = 0.0;
    for rec in records {
        let dev_sq: f64 = rec
            .theta_hat
            .iter()
            .zip(&theta_bar)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        sum_dev_norm += dev_sq.sqrt();
        for (fh, fb) in rec.f_hat.iter().zip(&f_bar) {
            sum_f_dev_abs += (fh - fb).abs();
        }
    }
    let std_theta = (sum_dev_norm / n / design.r as f64).sqrt();
    let std_f = (sum_f_dev_abs / (n * n_grid)).sqrt();

    // Coverage: the deviation theta_hat - theta_star falls inside the
    // bootstrap deviation interval, per coordinate.
    let with_ci = records.iter().filter(|r| r.ci_dev.is_some()).count();
    let cr_theta = if with_ci == records.len() {
        let mut hits = 0usize;
        for rec in records {
            let ci = rec.ci_dev.as_ref().unwrap();
            ensure_dim(ci.len() == d, "record CI dimension mismatch")?;
            for s in 0..d {
                let dev = rec.theta_hat[s] - theta_star[s];
                if dev >= ci[s].0 && dev <= ci[s].1 {
                    hits += 1;
                }
            }
        }
        Some(hits as f64 / (n * d as f64))
    } else {
        None
    };

    Ok(MetricsReport {
        rmse_theta,
        rmse_f,
        cr_theta,
        bias_theta,
        std_theta,
        bias_f,
        std_f,
        reps_used: records.len(),
        reps_failed,
    })
}

/// Write per-replication records: one row per successful replication.
pub fn write_records_csv(path: &Path, report: &StudyReport) -> Result<()> {
    let d = 2 * report.design.r;
    let n_grid = report.grid.len();
    let with_ci = report.records.iter().any(|r| r.ci_dev.is_some());
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["rep".to_string()];
    header.extend((1..=d).map(|s| format!("theta_hat_{s}")));
    header.extend((0..n_grid).map(|l| format!("f_hat_{l}")));
    if with_ci {
        header.extend((1..=d).map(|s| format!("ci_dev_lo_{s}")));
        header.extend((1..=d).map(|s| format!("ci_dev_hi_{s}")));
    }
    header.push("fallbacks".into());
    header.push("boot_failed".into());
    w.write_record(&header)?;
    for rec in &report.records {
        let mut row = vec![rec.rep.to_string()];
        row.extend(rec.theta_hat.iter().map(|&v| fmt_float(v)));
        row.extend(rec.f_hat.iter().map(|&v| fmt_float(v)));
        if with_ci {
            let ci = rec.ci_dev.as_ref().ok_or_else(|| {
                Error::InvalidConfig("mixed bootstrap/no-bootstrap records".into())
            })?;
            row.extend(ci.iter().map(|c| fmt_float(c.0)));
            row.extend(ci.iter().map(|c| fmt_float(c.1)));
        }
        row.push(rec.fallbacks.to_string());
        row.push(rec.boot_failed.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Read records written by [`write_records_csv`].
pub fn read_records_csv(path: &Path, d: usize, n_grid: usize) -> Result<Vec<RepRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let header_len = r.headers()?.len();
    let with_ci = header_len == 1 + d + n_grid + 2 * d + 2;
    ensure_dim(
        with_ci || header_len == 1 + d + n_grid + 2,
        "records CSV has unexpected column count",
    )?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut it = rec.iter();
        let rep: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidConfig("bad rep index".into()))?;
        let theta_hat = (0..d)
            .map(|_| parse_float(it.next().unwrap_or("")))
            .collect::<Result<Vec<f64>>>()?;
        let f_hat = (0..n_grid)
            .map(|_| parse_float(it.next().unwrap_or("")))
            .collect::<Result<Vec<f64>>>()?;
        let ci_dev = if with_ci {
            let lo = (0..d)
                .map(|_| parse_float(it.next().unwrap_or("")))
                .collect::<Result<Vec<f64>>>()?;
            let hi = (0..d)
                .map(|_| parse_float(it.next().unwrap_or("")))
                .collect::<Result<Vec<f64>>>()?;
            Some(lo.into_iter().zip(hi).collect())
        } else {
            None
        };
        let fallbacks: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidConfig("bad fallback count".into()))?;
        let boot_failed: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidConfig("bad boot_failed count".into()))?;
        out.push(RepRecord {
            rep,
            theta_hat,
            f_hat,
            fallbacks,
            ci_dev,
            boot_failed,
        });
    }
    Ok(out)
}

/// Squared parameter error of one record against the benchmark truth.
pub fn theta_error_sq(rec: &RepRecord, theta_star: &ThetaParam) -> f64 {
    rec.theta_hat
        .iter()
        .zip(theta_star.flatten())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_records() -> (SimDesign, Vec<Vec<f64>>, Vec<RepRecord>) {
        let design = SimDesign {
            reps: 3,
            grid_points: 2,
            ..SimDesign::default()
        };
        let grid = eval_grid(design.a, design.r, design.grid_points);
        let theta_star = true_theta(2, 2).unwrap().flatten();
        let records = (0..3)
            .map(|rep| RepRecord {
                rep,
                theta_hat: theta_star.clone(),
                f_hat: grid.iter().map(|x| true_f(x, 2)).collect(),
                fallbacks: 0,
                ci_dev: Some(vec![(-0.1, 0.1); 4]),
                boot_failed: 0,
            })
            .collect();
        (design, grid, records)
    }

    #[test]
    fn perfect_estimates_give_zero_errors_and_full_coverage() {
        let (design, grid, records) = tiny_records();
        let m = compute_metrics(&design, &grid, &records, 0).unwrap();
        assert_eq!(m.rmse_theta, 0.0);
        assert_eq!(m.rmse_f, 0.0);
        assert_eq!(m.cr_theta, Some(1.0));
        assert_eq!(m.bias_theta, 0.0);
    }

    #[test]
    fn infinite_intervals_cover_everything() {
        let (design, grid, mut records) = tiny_records();
        for rec in &mut records {
            rec.theta_hat[0] += 0.3; // push the estimate away from truth
            rec.ci_dev = Some(vec![(f64::NEG_INFINITY, f64::INFINITY); 4]);
        }
        let m = compute_metrics(&design, &grid, &records, 0).unwrap();
        assert_eq!(m.cr_theta, Some(1.0));
        assert!(m.rmse_theta > 0.0);
    }

    #[test]
    fn records_csv_roundtrip_reproduces_metrics_exactly() {
        let (design, grid, mut records) = tiny_records();
        // Perturb so the metrics are non-trivial.
        records[1].theta_hat = vec![0.61, 0.79, 0.59, -0.81];
        records[2].f_hat[0] += 1.0 / 3.0;
        let report = StudyReport {
            design: design.clone(),
            metrics: compute_metrics(&design, &grid, &records, 0).unwrap(),
            grid: grid.clone(),
            records,
        };
        let dir = std::env::temp_dir().join("ghm_study_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("reps.csv");
        write_records_csv(&path, &report).unwrap();
        let back = read_records_csv(&path, 4, grid.len()).unwrap();
        assert_eq!(back, report.records);
        let m2 = compute_metrics(&design, &grid, &back, 0).unwrap();
        assert_eq!(m2.rmse_theta.to_bits(), report.metrics.rmse_theta.to_bits());
        assert_eq!(m2.rmse_f.to_bits(), report.metrics.rmse_f.to_bits());
        assert_eq!(m2.cr_theta, report.metrics.cr_theta);
        assert_eq!(m2.std_f.to_bits(), report.metrics.std_f.to_bits());
    }
}
