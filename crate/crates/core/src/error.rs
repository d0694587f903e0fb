use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: expected {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        constraint: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("model is not identifiable: {0}")]
    NotIdentifiable(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("series order {available} is too small, need at least {required}")]
    InsufficientOrder { required: usize, available: usize },

    #[error("random walk did not stop within {cap} steps")]
    StepCapExceeded { cap: u64 },

    #[error("point {0:?} is not a boundary point of the plan")]
    NotOnBoundary(Vec<u32>),

    #[error("{0}")]
    Plan(String),

    #[error("plan file line {line}: {message}")]
    PlanFormat { line: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: impl ToString, constraint: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value: value.to_string(),
            constraint,
        }
    }
}
