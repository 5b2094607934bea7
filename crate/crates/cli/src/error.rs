use std::path::Path;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] semtune::Error),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    /// Missing inputs that clap cannot see because they may come from the
    /// config file.
    #[error("{0}")]
    Usage(String),
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error_kind: &'a str,
    detail: String,
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Lib(e) => e.kind(),
            CliError::Config(_) => "InvalidConfig",
            CliError::Io { .. } => "IoFailure",
            CliError::Usage(_) => "UsageError",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    /// One-line JSON object `{error_kind, detail}`.
    pub fn to_json(&self) -> String {
        let report = ErrorReport {
            error_kind: self.kind(),
            detail: self.to_string(),
        };
        serde_json::to_string(&report).expect("error report serializes")
    }
}
