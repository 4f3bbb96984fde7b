use thiserror::Error;

use crate::algebra::AlgebraLevel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("algebra level mismatch: {left:?} vs {right:?}")]
    LevelMismatch {
        left: AlgebraLevel,
        right: AlgebraLevel,
    },

    #[error("unsupported algebra dimension {0} (expected 1, 2, 4, 8 or 16)")]
    InvalidDimension(usize),

    #[error("{op} is not supported at level {level:?}")]
    UnsupportedLevel {
        level: AlgebraLevel,
        op: &'static str,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("division by an element of zero modulus")]
    DivisionByZero,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("no zero divisor found at dimension {dim}; the multiplication table is broken")]
    ZeroDivisorNotFound { dim: usize },

    #[error("adjoint check failed: relative mismatch {mismatch:e}")]
    AdjointMismatch { mismatch: f64 },

    #[error("non-finite iterate at iteration {iteration}")]
    NonFinite { iteration: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
