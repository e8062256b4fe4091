use eqsys_core::CoreError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("type error at {line}:{col}: {msg}")]
    Type { line: usize, col: usize, msg: String },
    #[error("score/observe is only allowed under the conditional transformer")]
    ScoreNotAllowed,
    #[error("nondeterministic choice is not supported by the {0} translation")]
    NondetUnsupported(&'static str),
    #[error("negative cost {0}; decompose with split_negative_costs")]
    NegativeCost(String),
    #[error("system is not 1-bounded: {0}")]
    NotOneBounded(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(CoreError),
}

impl From<CoreError> for FrontendError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Syntax { line, col, msg } => FrontendError::Syntax { line, col, msg },
            e => FrontendError::Core(e),
        }
    }
}

pub type Result<T, E = FrontendError> = std::result::Result<T, E>;
