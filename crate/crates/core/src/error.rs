use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HaloError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite input {0} cannot be lifted to a rational")]
    NonFinite(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("truncated exponential series is non-positive at index {index}")]
    SeriesUnderflow { index: usize },
    #[error("inverse square root requires a positive argument")]
    Domain,
    #[error("Newton-Raphson did not reach tolerance after {iters} iterations")]
    NoConvergence { iters: usize },
    #[error("degenerate input: variance plus epsilon is zero")]
    Degenerate,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, HaloError>;
