use dqms_core::optimizer::OptimizerError;
use dqms_core::protocol::ProtocolError;
use dqms_core::rates::RateError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Infeasible { .. } | ProtocolError::TooLarge { .. } => {
                CliError::Infeasible(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<RateError> for CliError {
    fn from(e: RateError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<OptimizerError> for CliError {
    fn from(e: OptimizerError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
