use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("decode failure: {0}")]
    Decode(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Decode(_) => 3,
            CliError::Budget(_) => 4,
            CliError::Io(_) | CliError::Other(_) => 1,
        }
    }
}

impl From<insdel_ldc::Error> for CliError {
    fn from(e: insdel_ldc::Error) -> Self {
        use insdel_ldc::Error as E;
        match e {
            E::DecodeFailure { .. } => CliError::Decode(e.to_string()),
            E::BudgetExceeded(_) => CliError::Budget(e.to_string()),
            E::Io(io) => CliError::Io(io),
            E::InvalidParams(_)
            | E::UnknownChannel(_)
            | E::IndexOutOfRange { .. }
            | E::LambdaTooSmall { .. }
            | E::EmptyInput
            | E::LengthMismatch { .. }
            | E::MessageTooLong { .. }
            | E::TooManyBlocks { .. }
            | E::BudgetTooSmall { .. } => CliError::Usage(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Other(e.to_string())
    }
}
