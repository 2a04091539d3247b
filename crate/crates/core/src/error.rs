use alloc::string::String;

/// Errors raised by the trackers, generators and oracles.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    /// A ridge system was not positive definite; only possible when the
    /// regularization weight is zero.
    #[error("singular {dim}x{dim} system; use a positive regularization weight")]
    Singular { dim: usize },

    #[error("unsupported mode: {0}")]
    Unsupported(String),

    #[error("no convergence after {iterations} iterations (last objective {last_objective})")]
    NoConvergence { iterations: usize, last_objective: f64 },

    #[error("backtracking exceeded {cap} growth steps")]
    BacktrackingCap { cap: usize },

    #[error("problem too large for the dense oracle: {rows}x{cols} exceeds {limit} entries")]
    TooLarge { rows: usize, cols: usize, limit: usize },

    #[error("empty history")]
    EmptyHistory,

    #[error("slices were not retained; enable retention or supply a second pass")]
    NotRetained,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
