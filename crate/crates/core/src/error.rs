use thiserror::Error;

/// Errors surfaced by the numerical and I/O routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Index outside its admissible range.
    #[error("index error: {0}")]
    Index(String),

    /// Requested computation exceeds the configured memory guard.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Caller violated a structural precondition (mismatched sizes, wrong table kind).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Numerical breakdown such as a non-positive pivot.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Malformed text input.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
