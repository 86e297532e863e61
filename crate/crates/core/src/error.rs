use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AqpuError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("operator is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("operator is not unitary (defect {0:e})")]
    NotUnitary(f64),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solver failed at t = {time}: {reason}")]
    Solver { time: f64, reason: String },
    #[error("guard exceeded: {0}")]
    Guard(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, AqpuError>;
