//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the library.
///
/// Domain violations are hard errors rather than silent clamps: every
/// approximation guarantee in the network layer is conditional on its input
/// range, so feeding a point outside that range is a caller bug, not a value
/// to be repaired.
#[derive(Debug, Error)]
pub enum Error {
    /// Vector/matrix dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An input lies outside the domain on which the operation is defined.
    #[error("domain violation: {0}")]
    Domain(String),

    /// A configuration value fails its invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Evaluation point is outside the cube partition `[-a,a]^r`.
    #[error("point outside the partition region")]
    OutOfRegion,

    /// Evaluation point falls into a cube with no fitted coefficients.
    #[error("owning cube has no fitted coefficients")]
    EmptyCube,

    /// No observation maps into the partition region.
    #[error("no in-region observations")]
    NoInRegionObservations,

    /// A matrix required to be positive definite is not.
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// Too many bootstrap replications failed to refit.
    #[error("bootstrap aborted: {failed} of {total} replications failed")]
    TooManyBootstrapFailures { failed: usize, total: usize },

    /// Numerical failure outside the categories above.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    fn dim(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    /// True when the error indicates bad input rather than a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_)
                | Error::Domain(_)
                | Error::InvalidConfig(_)
                | Error::Csv(_)
                | Error::Json(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_dim(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::dim(msg))
    }
}

pub(crate) fn ensure_domain(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg.into()))
    }
}
