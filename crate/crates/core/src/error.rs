//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// A physical argument is outside its meaningful range.
    #[error("domain error: {0}")]
    Domain(String),

    /// A geometric query could not be answered (flat potential, missing wells).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A numeric routine failed to converge or hit an instability guard.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Input data does not satisfy the preconditions of an algorithm.
    #[error("validation error: {0}")]
    Validation(String),
}

impl CoreError {
    pub fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }

    pub fn geometry(msg: impl Into<String>) -> Self {
        Self::Geometry(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Self::Numeric(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Self::Validation(msg.into())
    }
}
