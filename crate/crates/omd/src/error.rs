//! Crate-wide error type.
//!
//! Input-shape problems (bad dimensions, non-Hermitian covariances, malformed
//! configs) are distinguished from solver-side failures so callers can map
//! them to different exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("matrix dimensions must be at least 1x1")]
    EmptyMatrix,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("matrix is not positive definite")]
    NonPositiveDefinite,

    #[error("covariance is infeasible: {0}")]
    InfeasibleCovariance(String),

    #[error("objective weights must be nonnegative and sum to 1 (sum {sum:.6e})")]
    UnnormalizedWeights { sum: f64 },

    #[error("dual subgradient does not bracket zero on [0, 1]")]
    BisectionFailed,

    #[error("no successive decoding order supports the returned rate point")]
    OrderNotFound,

    #[error("at most {max} users are supported (got {got})")]
    TooManyUsers { got: usize, max: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// True when the error describes malformed input rather than a numeric
    /// failure inside a solver. The CLI maps the former to exit code 1 and
    /// the latter to exit code 2.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::NonFinite
                | Error::EmptyMatrix
                | Error::DimensionMismatch(_)
                | Error::NotHermitian { .. }
                | Error::NotPositiveSemidefinite { .. }
                | Error::InfeasibleCovariance(_)
                | Error::TooManyUsers { .. }
                | Error::InvalidConfig(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
