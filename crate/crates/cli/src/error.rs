//! Command failures and their one-line machine-readable form.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    /// A command ran before the step that produces its input.
    #[error("missing {artifact}; run `{step}` first")]
    MissingPrerequisite { artifact: PathBuf, step: &'static str },

    /// An input no longer matches the checksum recorded when it was written.
    #[error("{artifact} changed since `{step}` wrote it; rerun `{step}`")]
    StaleInput { artifact: PathBuf, step: &'static str },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] routekd::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::MissingPrerequisite { .. } => "missing_prerequisite",
            CliError::StaleInput { .. } => "stale_input",
            CliError::Io { .. } => "io",
            CliError::Core(routekd::Error::Io { .. }) => "io",
            CliError::Core(routekd::Error::Parse { .. }) => "parse",
            CliError::Core(routekd::Error::Shape(_)) => "shape",
            CliError::Core(_) => "validation",
        }
    }

    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::MissingPrerequisite { .. } | CliError::StaleInput { .. } => 3,
            CliError::Io { .. } | CliError::Core(routekd::Error::Io { .. }) => 4,
            CliError::Core(_) => 5,
        }
    }

    /// A single JSON line: `{"error":kind,"step":..,"message":..}`.
    pub fn to_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            error: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            step: Option<&'a str>,
            message: String,
        }
        let step = match self {
            CliError::MissingPrerequisite { step, .. } | CliError::StaleInput { step, .. } => Some(*step),
            _ => None,
        };
        serde_json::to_string(&Line {
            error: self.kind(),
            step,
            message: self.to_string(),
        })
        .expect("plain strings serialize")
    }
}
