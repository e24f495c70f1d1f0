//! CLI error kinds, exit codes and the single-line JSON report.

use std::path::PathBuf;

use thiserror::Error;
use zakdd::ZakError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{message} at line {line}, column {column}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Parse { .. } => "parse_error",
            Self::Invalid(_) => "invalid_config",
            Self::Io { .. } => "io_error",
            Self::Runtime(_) => "runtime_error",
        }
    }

    /// 2 for configuration problems, 3 for I/O, 1 for failures during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Invalid(_) => 2,
            Self::Io { .. } => 3,
            Self::Runtime(_) => 1,
        }
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::json!({ "error": self.kind(), "message": self.to_string() });
        if let Self::Parse { line, column, .. } = self {
            v["line"] = (*line).into();
            v["column"] = (*column).into();
        }
        v.to_string()
    }
}

/// Core errors raised while checking a configuration count as invalid configuration.
impl From<ZakError> for CliError {
    fn from(e: ZakError) -> Self {
        Self::Invalid(e.to_string())
    }
}

/// Wraps core failures that happen after validation.
pub fn runtime(e: ZakError) -> CliError {
    CliError::Runtime(e.to_string())
}
