use certificate_engine::EngineError;
use eqsys_core::CoreError;
use oracle::OracleError;
use pgcl_frontend::FrontendError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("time limit exceeded")]
    Timeout,
    #[error("cwp₂ is not bounded away from 1: {0}")]
    DivergentNormalization(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Timeout => 3,
            _ => 2,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Timeout => CliError::Timeout,
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        if e.is_timeout() {
            CliError::Timeout
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<FrontendError> for CliError {
    fn from(e: FrontendError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Core(c) => c.into(),
            e => CliError::Input(e.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
