use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PsffError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("size mismatch: expected {expected}, got {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("operator of dimension {dim} needs {bytes} bytes, above the budget of {budget} bytes")]
    MemoryBudget { dim: usize, bytes: u128, budget: u128 },

    #[error("matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),

    #[error("eigendecomposition failed: {0}")]
    Eigensolver(String),

    #[error("linear system is singular or ill-conditioned: {0}")]
    IllConditioned(String),
}

pub type Result<T> = std::result::Result<T, PsffError>;

pub(crate) fn invalid(msg: impl Into<String>) -> PsffError {
    PsffError::InvalidParameter(msg.into())
}
