use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input; `field` names the offending field.
    #[error("invalid {field}: {message}")]
    Input { field: String, message: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("index {index} out of range (len {len})")]
    Index { index: usize, len: usize },

    #[error("{what} size {size} exceeds cap {cap}")]
    SizeCap { what: &'static str, size: usize, cap: usize },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("degenerate experiment: {0}")]
    Degenerate(String),

    /// A mathematical identity or inequality that must hold exactly was violated.
    #[error("assertion failed: {0}")]
    Assertion(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn input(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Input { field: field.into(), message: message.into() }
    }
}
