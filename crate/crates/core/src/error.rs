//! Error type shared across the crate.
//!
//! Variants are grouped by failure class so callers (notably the CLI) can
//! map them onto stable exit codes: usage and I/O problems versus numeric
//! or protocol failures discovered at run time.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or layer shape mismatch; the message names the offending axes.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Invalid model or run configuration; names the field that failed.
    #[error("config error: field `{field}`: {message}")]
    Config { field: String, message: String },

    /// Non-finite values or numerical divergence.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Operation invoked in an invalid state (e.g. eval-mode batch norm
    /// before any training batch has populated the running statistics).
    #[error("state error: {0}")]
    State(String),

    /// Out-of-range index (frame number, class label, ...).
    #[error("index error: {0}")]
    Index(String),

    /// Degenerate or otherwise invalid argument values.
    #[error("argument error: {0}")]
    Argument(String),

    /// Evaluation-protocol violation (e.g. LOSO with a single subject).
    #[error("protocol error: {0}")]
    Protocol(String),

    /// Malformed or truncated binary file.
    #[error("format error: {0}")]
    Format(String),

    /// Manifest parse or validation failure, with the 1-based row number.
    #[error("manifest error at line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: msg.into() }
    }

    /// True for failures that indicate bad user input or I/O rather than a
    /// numeric/protocol problem at run time. The CLI maps these to exit 2.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::Argument(_)
                | Error::Format(_)
                | Error::Manifest { .. }
                | Error::Io(_)
                | Error::Image(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
