use thiserror::Error;

/// Failures surfaced by the command-line tool, each with a fixed exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, inadmissible parameters, or an unreadable/malformed file.
    #[error("{0}")]
    Usage(String),
    /// Well-formed input whose values cannot be used (non-finite, all zero).
    #[error("{0}")]
    Data(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl From<dyadic_morrey::Error> for CliError {
    fn from(e: dyadic_morrey::Error) -> Self {
        match e {
            dyadic_morrey::Error::Input(_) => CliError::Data(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
