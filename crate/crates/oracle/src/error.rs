use eqsys_core::CoreError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("call {0} leaves the grid and no out-of-range policy is set")]
    PolicyRequired(String),
    #[error("no grid bounds for variable {var} of {pred}")]
    MissingBounds { pred: String, var: String },
    #[error("empty grid range {lo}..{hi} for {var}")]
    EmptyRange { var: String, lo: i64, hi: i64 },
    #[error("call {0} has a non-integer argument")]
    NonInteger(String),
    #[error("u is not prefixed at {0}")]
    NotPrefixed(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T, E = OracleError> = std::result::Result<T, E>;
