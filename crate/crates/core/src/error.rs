use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PqcError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("size error: {what} = {got} exceeds the supported maximum {max}")]
    Size { what: &'static str, got: usize, max: usize },

    #[error("normalization error: norm {norm} deviates from 1 by more than {tol}")]
    Normalization { norm: f64, tol: f64 },

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("channel error: {0}")]
    Channel(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported phase {0}; only +1 and -1 are allowed here")]
    UnsupportedPhase(String),

    #[error("state error: {0}")]
    State(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("degenerate encoding: gamma {0} is too small to divide by")]
    DegenerateEncoding(f64),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("integrator instability: trace drifted by {drift:e} at t = {time}")]
    IntegratorInstability { drift: f64, time: f64 },

    #[error("insufficient rank: collected {rank} independent vectors, need {needed}")]
    InsufficientRank { rank: usize, needed: usize },

    #[error("search failed after {retries} batches")]
    RetriesExhausted { retries: usize },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, PqcError>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(PqcError::Dimension(msg.into()))
}
