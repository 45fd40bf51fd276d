//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not symmetric: {detail}")]
    NotSymmetric { detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A computation produced NaN/Inf; callers treat this as divergence.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// An optimization run hit a non-finite quantity at a known step.
    #[error("run diverged at step {step}: non-finite {quantity}")]
    Diverged { step: u64, quantity: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }
}
