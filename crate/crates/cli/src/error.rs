//! Driver-level error type with process exit-code mapping.

use std::fmt;
use std::path::PathBuf;

/// Errors surfaced by the command-line layer.
#[derive(Debug)]
pub enum CliError {
    /// A file has invalid contents; line and column are 1-based.
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    /// A referenced file does not exist.
    MissingFile(PathBuf),
    /// Reading or writing a file failed.
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// The request itself is inconsistent.
    Invalid(String),
    /// The numerical library rejected the inputs or failed to compute.
    Numeric(limred::Error),
}

/// Convenience alias used across the driver.
pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// Process exit code: 2 for validation problems, 3 for runtime failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::MissingFile(_) | CliError::Invalid(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Numeric(e) => match e {
                limred::Error::DimensionMismatch(_)
                | limred::Error::NonFinite(_)
                | limred::Error::InvalidLimit(_)
                | limred::Error::UnstableMatrix => 2,
                _ => 3,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse {
                path,
                line,
                column,
                message,
            } => write!(
                f,
                "parse error in {} at line {line}, column {column}: {message}",
                path.display()
            ),
            CliError::MissingFile(path) => write!(f, "file not found: {}", path.display()),
            CliError::Io { path, source } => {
                write!(f, "io error on {}: {source}", path.display())
            }
            CliError::Invalid(message) => write!(f, "invalid request: {message}"),
            CliError::Numeric(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CliError::Io { source, .. } => Some(source),
            CliError::Numeric(e) => Some(e),
            _ => None,
        }
    }
}

impl From<limred::Error> for CliError {
    fn from(e: limred::Error) -> Self {
        CliError::Numeric(e)
    }
}
