//! Error type shared across the toolkit.

use thiserror::Error;

/// Errors produced by the toolkit.
///
/// The variants distinguish problems with user-supplied data or configuration
/// (`InvalidInput`, `ShapeMismatch`, `CsvFormat`) from environment and
/// internal failures (`Io`, `Serialization`, `Internal`). The CLI maps the
/// former to exit code 3 and the latter to exit code 4.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on data or configuration was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix or vector dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A CSV file could not be parsed; locations are 1-based.
    #[error("csv error at line {line}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    CsvFormat {
        line: u64,
        column: Option<usize>,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),

    /// An internal invariant was violated (e.g. a stale backprop tape).
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True when the error stems from user-supplied data or configuration.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::ShapeMismatch(_) | Error::CsvFormat { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
