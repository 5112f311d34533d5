//! Cube-partitioned sieve least squares for hierarchical index models.

mod config;
mod optim;
mod partition;
mod sieve;

pub use config::{index_values, Dataset, ModelConfig, ThetaParam};
pub use optim::{fit, profile_objective, FitOptions};
pub use partition::{CubeIndex, CubePartition};
pub use sieve::{
    context_for, fit_betas_given_theta, piecewise_eval, q_loss, BetaFit, FitDocument,
    HierarchicalFit, QLoss, SieveContext,
};
