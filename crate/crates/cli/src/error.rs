use std::fmt;

use cuelens_core::Error;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, missing files, inconsistent telemetry.
    Validation(String),
    /// The input admits no meaningful result.
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Degenerate(_) => 3,
        }
    }

    pub fn missing(field: &str) -> Self {
        CliError::Validation(format!("telemetry lacks field: {field}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (prefix, msg) = match self {
            CliError::Validation(m) => ("", m),
            CliError::Degenerate(m) => ("degenerate: ", m),
        };
        write!(f, "{prefix}{}", msg.replace('\n', " "))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::MissingFile { field, path } if field == "manifest" => {
                CliError::Validation(format!("manifest not found: {}", path.display()))
            }
            Error::InsufficientData(_) | Error::Singular(_) | Error::DegenerateChannel { .. } => {
                CliError::Degenerate(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
