//! Constructive ReLU networks and sieve estimation for generalized
//! hierarchical index models.
//!
//! The crate has four parts:
//!
//! - [`relu_nets`]: ReLU networks with exact, hard-coded weights — a product
//!   network computing `xy` on the unit square, sawtooth networks for
//!   `x(1-x)`, hierarchical monomial networks for `x^alpha`, and local
//!   polynomial bases built from them, together with their analytic
//!   piecewise derivatives and a smoothed ReLU variant.
//! - [`estimator`]: cube-partitioned sieve least squares for models
//!   `y_t = f(z_{1t}' theta_1, ..., z_{rt}' theta_r) + e_t`, profiling the
//!   per-cube coefficients and searching the product of unit spheres for
//!   `theta`.
//! - [`inference`]: an `l`-dependent multiplier bootstrap producing
//!   per-coordinate confidence intervals for `theta`.
//! - [`sim`]: the simulation design, Monte Carlo study harness, metrics,
//!   and rolling one-step-ahead forecast evaluation backing the CLI.
//!
//! All fitting is deterministic given a seed; replications run concurrently
//! with per-replication RNG streams and order-independent assembly.

pub mod error;
pub mod estimator;
pub mod inference;
pub mod io;
pub mod relu_nets;
pub mod sim;

pub use error::{Error, Result};

/// Build the global rayon pool honoring the `GHM_THREADS` env var.
///
/// Call once at process start; later calls are no-ops. When the variable is
/// unset or unparsable the default pool (all cores) is used.
pub fn init_threads() {
    use std::sync::OnceLock;
    static INIT: OnceLock<()> = OnceLock::new();
    INIT.get_or_init(|| {
        if let Ok(v) = std::env::var("GHM_THREADS") {
            if let Ok(n) = v.parse::<usize>() {
                if n >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build_global();
                }
            }
        }
    });
}
