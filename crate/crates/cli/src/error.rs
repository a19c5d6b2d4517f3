use std::fmt;
use std::process::ExitCode;

use lotshare_core::Error;

/// What went wrong, which decides the process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad configuration or arguments (exit 2).
    Config,
    /// Unreadable, malformed or inconsistent data and I/O failures (exit 3).
    Data,
    /// A broken internal invariant (exit 4).
    Internal,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Config, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Data, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Internal, message: message.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Internal => 4,
        })
    }

    /// Prefixes the message with where it happened.
    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::InvalidArgument(_) | Error::UndefinedMetric(_) => ErrorKind::Config,
            Error::Parse { .. } | Error::Validation { .. } | Error::Index { .. } | Error::Format(_) | Error::Io(_) => {
                ErrorKind::Data
            }
            Error::Shape { .. } | Error::State(_) => ErrorKind::Internal,
        };
        CliError { kind, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e.to_string())
    }
}

/// Treats any core error as a data problem (used while reading inputs).
pub fn as_data(e: Error) -> CliError {
    CliError::data(e.to_string())
}
