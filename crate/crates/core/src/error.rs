use thiserror::Error;

/// Errors produced by grid construction, assembly, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate grid spacing at interval {0}")]
    DegenerateSpacing(usize),

    #[error("matrix is singular (zero pivot at column {0})")]
    Singular(usize),

    #[error("matrix order {order} exceeds the configured cap {cap}")]
    TooLarge { order: usize, cap: usize },

    #[error("Krylov breakdown at iteration {iteration} with relative residual {residual:e}")]
    Breakdown { iteration: usize, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid multigrid hierarchy: {0}")]
    Hierarchy(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
