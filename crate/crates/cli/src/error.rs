use std::io;
use std::path::PathBuf;

use serde_json::{json, Value};

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fsir_core::Error),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("subject `{subject}` has conflicting responses {first} and {second} (line {line})")]
    InconsistentResponse {
        subject: String,
        first: f64,
        second: f64,
        line: u64,
    },
    #[error("line {line}: time {time} of subject `{subject}` is outside [{}, {}]", .interval.0, .interval.1)]
    OutOfInterval {
        subject: String,
        time: f64,
        line: u64,
        interval: (f64, f64),
    },
    #[error("invalid `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", .path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", .path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Parse { .. } => "ParseError",
            CliError::InconsistentResponse { .. } => "InconsistentResponse",
            CliError::OutOfInterval { .. } => "OutOfInterval",
            CliError::Config { .. } => "ConfigInvalid",
            CliError::Io { .. } => "IoError",
            CliError::Json { .. } => "JsonError",
            CliError::Csv { .. } => "CsvError",
        }
    }

    /// Configuration problems exit with 2, everything else with 1.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. }
            | CliError::Json { .. }
            | CliError::Core(fsir_core::Error::ConfigInvalid { .. }) => 2,
            _ => 1,
        }
    }

    /// Machine-readable description of the failure.
    pub fn record(&self) -> Value {
        let mut rec = json!({
            "error": self.kind(),
            "message": self.to_string(),
        });
        match self {
            CliError::Config { field, .. } => rec["field"] = json!(field),
            CliError::Core(fsir_core::Error::ConfigInvalid { field, .. }) => rec["field"] = json!(field),
            CliError::Parse { line, .. }
            | CliError::InconsistentResponse { line, .. }
            | CliError::OutOfInterval { line, .. } => rec["line"] = json!(line),
            _ => {}
        }
        rec
    }
}
