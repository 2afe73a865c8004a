//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// A user-supplied value fails validation (dimensions, positivity,
    /// stability bounds, shape mismatches).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Configuration file could not be parsed or is inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// Expression source could not be parsed or evaluated.
    #[error("expression error: {0}")]
    Expr(String),

    /// A linear solve or eigenvalue computation failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The time integration left the stable regime.
    #[error("solver diverged: {0}")]
    Diverged(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CoreError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CoreError::InvalidInput(msg.into())
    }
}
