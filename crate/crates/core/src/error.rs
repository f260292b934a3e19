use thiserror::Error;

/// Errors raised by model construction, evaluation and sampling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("truncation point has C(t) = {0}, which must be positive")]
    ZeroMass(f64),

    #[error("nesting condition violated: {0}")]
    Nesting(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error(
        "rejection sampler exceeded {max_tries} tries after {accepted} acceptances \
         (empirical acceptance rate {rate:.3e}, expected C(t) = {expected:.3e})"
    )]
    TooManyTries {
        max_tries: u64,
        accepted: usize,
        rate: f64,
        expected: f64,
    },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid specification: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
