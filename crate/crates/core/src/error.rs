use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a measurement needs at least 2 singular values, got {0}")]
    TooShort(usize),

    #[error("singular value at index {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },

    #[error("singular value at index {index} is negative ({value})")]
    Negative { index: usize, value: f64 },

    #[error("singular value at index {index} exceeds 1 ({value}); enable rescaling to normalize it")]
    AboveOne { index: usize, value: f64 },

    #[error("cannot parse singular values from {0:?}")]
    Parse(String),

    #[error("all singular values are zero")]
    AllZero,

    #[error("invalid family parameters: {0}")]
    Family(String),

    #[error("rejection sampling gave up after {attempts} attempts without an admissible sample")]
    RejectionBudget { attempts: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("no improvement direction exists at a singular measurement (rank-1 projection or identity)")]
    SingularPoint,
}

pub type Result<T> = std::result::Result<T, Error>;
