use std::fmt;

use shrinker_core::Error as CoreError;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// A check exceeded its tolerance (exit 1).
    Verification(String),
    /// Bad flags, config keys or values, or a missing input file (exit 2).
    Usage(String),
    /// A numerical routine failed (exit 3).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    // Input validation errors come from config values; the rest are numerical.
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::TooFewNodes { .. }
            | CoreError::InvalidProfile(_)
            | CoreError::Domain(_)
            | CoreError::Unsupported(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
