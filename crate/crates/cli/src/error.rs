use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing required field `{0}`")]
    MissingField(String),

    #[error("malformed config: {0}")]
    Config(String),

    #[error("unresolved {kind} `{name}`")]
    Unresolved { kind: &'static str, name: String },

    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: idpoint::Error,
    },

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub(crate) fn model(context: impl Into<String>) -> impl FnOnce(idpoint::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Model { context, source }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// 2 for configuration problems, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingField(_) | CliError::Config(_) | CliError::Unresolved { .. } => 2,
            CliError::Model { source, .. } => match source {
                idpoint::Error::InvalidParameter { .. }
                | idpoint::Error::Table(_)
                | idpoint::Error::Precondition(_)
                | idpoint::Error::OutOfDomain { .. } => 2,
                _ => 1,
            },
            CliError::Io { .. } => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (kind, field) = match self {
            CliError::MissingField(f) => ("missing_field", Some(f.clone())),
            CliError::Config(_) => ("config", None),
            CliError::Unresolved { name, .. } => ("unresolved_name", Some(name.clone())),
            CliError::Model { source, .. } => match source {
                idpoint::Error::InvalidParameter { name, .. } => ("invalid_parameter", Some(name.to_string())),
                _ => ("model", None),
            },
            CliError::Io { .. } => ("io", None),
        };
        json!({
            "error": kind,
            "field": field,
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
