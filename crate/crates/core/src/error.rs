use thiserror::Error;

/// Errors raised by the detection library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The covariance matrix is numerically not positive definite.
    #[error("covariance matrix is not positive definite (pivot {pivot})")]
    Conditioning { pivot: usize },

    #[error("change window is empty for n = {n}, alpha = {alpha}")]
    EmptyWindow { n: usize, alpha: f64 },

    /// B2(t) vanished inside the window of the unknown-mean GLRT.
    #[error("degenerate change window: score variance vanishes at t = {t}")]
    DegenerateWindow { t: usize },

    #[error("burn-in prefix too short: {got} samples, need at least {need}")]
    BurnInTooShort { got: usize, need: usize },

    #[error("estimation failed: {0}")]
    EstimationFailed(String),

    #[error("numerical evaluation failed: {0}")]
    Numerical(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("csv output failed: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
