use std::fmt::Display;

/// Failure of a command, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input: files, flags, config or data. Exit code 1.
    #[error("{0}")]
    Input(String),
    /// Anything else. Exit code 2.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn input(msg: impl Display) -> Self {
        CliError::Input(msg.to_string())
    }

    pub fn internal(msg: impl Display) -> Self {
        CliError::Internal(msg.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}
