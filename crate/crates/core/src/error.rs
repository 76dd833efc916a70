use thiserror::Error;

/// Errors raised by solvers, oracles and instance loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{method} requires finite gradient smoothness; use sgd_broo for non-smooth components")]
    RequiresSmoothness { method: &'static str },

    #[error("problem too large for the exact oracle (d = {d}, N = {n}; limits d <= 50, N <= 200)")]
    TooLarge { d: usize, n: usize },

    #[error("iteration budget of {iterations} exhausted before reaching tolerance")]
    BudgetExhausted { iterations: usize },

    #[error("query budget of {limit} exhausted")]
    QueryBudgetExhausted { limit: u64 },

    #[error("ball intersection is empty")]
    EmptyIntersection,

    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
