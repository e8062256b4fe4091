use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("non-polynomial term: {0}")]
    NonPolynomialTerm(String),
    #[error("non-linear guard atom: {0}")]
    NonLinearGuard(String),
    #[error("non-affine formula: {0}")]
    NonAffine(String),
    #[error("non-linear pullback of witness guard: {0}")]
    NonLinearPullback(String),
    #[error("min and max mixed in one branch")]
    MixedMinMax,
    #[error("undeclared predicate {0}")]
    UndeclaredPredicate(String),
    #[error("predicate {name} expects {expected} arguments, got {got}")]
    ArityMismatch { name: String, expected: usize, got: usize },
    #[error("missing assignment for {0}")]
    MissingAssignment(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("no witness piece covers state {0}")]
    Uncovered(String),
    #[error("parse error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{0}")]
    Parse(String),
    #[error("time limit exceeded")]
    Timeout,
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
