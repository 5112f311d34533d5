//! Simulation design, Monte Carlo study harness, and rolling forecasts.

mod design;
mod rolling;
mod study;

pub use design::{eval_grid, simulate, true_f, true_theta, SimDesign};
pub use rolling::{rolling_forecast, scores_from_points, ForecastPoint, RollingReport};
pub use study::{
    compute_metrics, read_records_csv, run_study, theta_error_sq, write_records_csv,
    MetricsReport, RepRecord, StudyReport,
};
