use thiserror::Error;

/// Errors produced by the verification toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (relative deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The pass operator does not accept the target state with certainty.
    #[error("pass operator does not fix the target state: <psi|Omega|psi> = {0}")]
    TargetNotPreserved(f64),

    #[error("probability {0} outside [0, 1] beyond rounding tolerance")]
    Probability(f64),

    #[error(
        "solver did not converge within the sweep budget (best feasible value: {})",
        best.map_or_else(|| "none".to_string(), |v| v.to_string())
    )]
    SolverNonConvergence { best: Option<f64> },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
