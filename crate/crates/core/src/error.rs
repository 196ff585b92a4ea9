use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by the zero rational function")]
    DivisionByZero,
}

pub type Result<T> = std::result::Result<T, Error>;
