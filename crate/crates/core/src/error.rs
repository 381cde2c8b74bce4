use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite: pivot {index} is {pivot:e} (threshold {threshold:e})")]
    NotPositiveDefinite {
        index: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: max |a_ij - a_ji| = {asymmetry:e}")]
    NotSymmetric { asymmetry: f64 },
    #[error("non-finite entry in {what} at position {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("root bracket failure: {0}")]
    BracketFailure(String),
    #[error("model {index} has a degenerate surrogate covariance (all diagonal entries below threshold)")]
    DegenerateModel { index: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
