use std::path::PathBuf;

use boostdyn::{Error, ParamViolation};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{message}")]
    Config { field: Option<String>, message: String },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] Error),
}

impl CliError {
    pub fn missing(field: &str) -> Self {
        CliError::Config {
            field: Some(field.to_string()),
            message: format!("missing field `{field}`"),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => 2,
            CliError::Model(e) if is_config_error(e) => 2,
            CliError::Model(_) => 3,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let kind = match self {
            CliError::Config { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Model(e) if is_config_error(e) => "config",
            CliError::Model(_) => "domain",
        };
        let mut v = json!({ "error": kind, "message": self.to_string() });
        if let Some(field) = self.field() {
            v["field"] = json!(field);
        }
        v
    }

    fn field(&self) -> Option<String> {
        match self {
            CliError::Config { field, .. } => field.clone(),
            CliError::Model(Error::InvalidParams(v)) => v.first().map(|x| {
                let name = match x {
                    ParamViolation::NonPositiveComponent { name, .. }
                    | ParamViolation::NegativeParasitic { name, .. } => name,
                    ParamViolation::DutyOutOfRange { .. } => "d",
                };
                format!("params.{name}")
            }),
            CliError::Model(Error::InvalidEvent(_)) => Some("event".into()),
            CliError::Model(Error::InvalidSolver(_) | Error::StepTooLarge { .. }) => Some("solver".into()),
            CliError::Model(Error::UnsupportedAxisPair(_)) => Some("sweep".into()),
            CliError::Model(Error::WindowOutOfRange { .. }) => Some("audit".into()),
            CliError::Model(Error::UnsupportedModel(_)) => Some("reference".into()),
            _ => None,
        }
    }
}

// errors caused by what the config asked for rather than by the numerics
fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidParams(_)
            | Error::InvalidEvent(_)
            | Error::InvalidSolver(_)
            | Error::StepTooLarge { .. }
            | Error::UnsupportedAxisPair(_)
            | Error::UnsupportedModel(_)
            | Error::UnknownParameter(_)
            | Error::WindowOutOfRange { .. }
    )
}
