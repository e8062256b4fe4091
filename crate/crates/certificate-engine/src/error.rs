use eqsys_core::CoreError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("conclusion is not affine in the unknowns: {0}")]
    NonLinearParameters(String),
    #[error("missing witness: {0}")]
    MissingWitness(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("certificate syntax: {0}")]
    Schema(String),
    #[error("time limit exceeded")]
    Timeout,
    #[error("{0}")]
    Invalid(String),
}

impl EngineError {
    pub fn is_timeout(&self) -> bool {
        matches!(self, EngineError::Timeout | EngineError::Core(CoreError::Timeout))
    }
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;
