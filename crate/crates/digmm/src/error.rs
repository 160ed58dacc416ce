use thiserror::Error;

/// Errors surfaced at module boundaries.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside a function's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix/vector shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A value failed an invariant check (non-finite, not row-stochastic, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A text input (RTTM, CSV) could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Training produced a non-finite loss.
    #[error("divergence: {0}")]
    Divergence(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
