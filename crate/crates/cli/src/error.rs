use thiserror::Error;

/// Failures, each mapped to a stable process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<gtseq_core::Error> for CliError {
    fn from(e: gtseq_core::Error) -> Self {
        use gtseq_core::Error as E;
        match e {
            E::StepCapExceeded { .. } | E::InsufficientOrder { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
