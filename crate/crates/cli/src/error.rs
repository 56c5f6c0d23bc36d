use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

use crate::config::ConfigError;
use crate::values::ValueError;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const CONDITION_FAILED: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const NON_CONVERGENCE: i32 = 3;
    pub const IO: i32 = 4;
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    /// A flag or flag combination is unacceptable.
    Usage { key: String, message: String },
    Core(noncollide::Error),
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn usage(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Usage {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn value(key: &str, e: ValueError) -> Self {
        CliError::usage(key, e.0)
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage { .. } => exit::VALIDATION,
            CliError::Core(e) if e.is_non_convergence() => exit::NON_CONVERGENCE,
            CliError::Core(_) => exit::VALIDATION,
            CliError::Io { .. } => exit::IO,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(ConfigError::Parse { .. }) => "parse",
            CliError::Config(ConfigError::Semantic { .. }) | CliError::Usage { .. } => "validation",
            CliError::Core(e) if e.is_non_convergence() => "non_convergence",
            CliError::Core(_) => "validation",
            CliError::Io { .. } => "io",
        }
    }

    /// One-line JSON description for stderr.
    pub fn record(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            error: &'a str,
            exit_code: i32,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            key: Option<&'a str>,
            #[serde(skip_serializing_if = "Option::is_none")]
            line: Option<usize>,
            #[serde(skip_serializing_if = "Option::is_none")]
            replication: Option<usize>,
        }
        let (key, line) = match self {
            CliError::Config(ConfigError::Semantic { key, .. }) | CliError::Usage { key, .. } => (Some(key.as_str()), None),
            CliError::Config(ConfigError::Parse { line, .. }) => (None, Some(*line)),
            _ => (None, None),
        };
        let replication = match self {
            CliError::Core(noncollide::Error::Replication { replication, .. }) => Some(*replication),
            _ => None,
        };
        let record = Record {
            error: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
            key,
            line,
            replication,
        };
        serde_json::to_string(&record).expect("error record serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config: {e}"),
            CliError::Usage { key, message } => write!(f, "{key}: {message}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<noncollide::Error> for CliError {
    fn from(e: noncollide::Error) -> Self {
        CliError::Core(e)
    }
}
