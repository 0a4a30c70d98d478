use thiserror::Error;

/// Errors raised by the reconstruction library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("oracle already consulted for this query")]
    OneShotViolation,

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("size guard: {0}")]
    SizeGuard(String),
}

pub type Result<T> = std::result::Result<T, Error>;
