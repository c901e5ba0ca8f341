//! Failure classification for exit codes: configuration problems exit 2,
//! numeric or data-quality failures exit 3.

use torusflow_core::Error;

#[derive(Debug)]
pub enum CommandError {
    /// Malformed or inconsistent configuration / input shape: exit 2.
    Config(String),
    /// The computation ran and the data failed a mathematical gate: exit 3.
    Numeric(String),
}

pub type CommandResult<T> = Result<T, CommandError>;

impl CommandError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CommandError::Config(_) => 2,
            CommandError::Numeric(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CommandError::Config(m) | CommandError::Numeric(m) => m,
        }
    }
}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        match &e {
            // shape and request problems are fixable in the config
            Error::Config(_)
            | Error::Parse(_)
            | Error::Io(_)
            | Error::InvalidLattice(_)
            | Error::DimensionMismatch(_)
            | Error::UnsupportedOrder { .. }
            | Error::NotImplementedDim { .. } => CommandError::Config(e.to_string()),
            // everything else is the data failing a mathematical property
            _ => CommandError::Numeric(e.to_string()),
        }
    }
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandError::Config(m) => write!(f, "config error: {m}"),
            CommandError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}
