//! Error types shared by the whole crate.

use thiserror::Error;

/// Errors produced by estimators, models and experiment runners.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data violated a basic contract (non-finite entries, empty data, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A required option was not supplied (e.g. the true covariance for the oracle).
    #[error("missing parameter: {0}")]
    MissingParameter(&'static str),

    /// The sample carries no usable signal (all-zero observations).
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// Shrinkage toward the scaled identity is vacuous in dimension 1.
    #[error("dimension must be at least 2, got p={0}")]
    DegenerateDimension(usize),

    /// A matrix required to be positive semidefinite is not.
    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),

    /// Matrix shapes do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A linear solve hit a numerically singular matrix.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// A fixed-point iteration did not reach its tolerance in the step budget.
    #[error("no convergence after {iterations} iterations (last step {last_delta:e})")]
    NonConvergence { iterations: usize, last_delta: f64 },

    /// A Monte Carlo trial failed; carries enough context to reproduce it.
    #[error("trial {trial} (n={n}, method={method}) failed: {source}")]
    Trial {
        n: usize,
        trial: usize,
        method: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
