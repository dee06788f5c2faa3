//! Error type shared by all modules.

use thiserror::Error;

/// Failure modes of the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An input violates a structural rule (e.g. membership of a channel index set).
    #[error("validation error: {0}")]
    Validation(String),
    /// Inconsistent or unusable configuration (grid, boundary condition, interval).
    #[error("configuration error: {0}")]
    Configuration(String),
    /// A numerical procedure failed (singular solve, bracket failure, ODE step collapse).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Input/output failure in the harness.
    #[error("i/o error: {0}")]
    Io(String),
}

/// Convenience result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
