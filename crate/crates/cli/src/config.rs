use std::path::{Path, PathBuf};

use boostdyn::analysis::{Axis, Constraint, Metric, Reference};
use boostdyn::{ConverterParams, Parameter, StepEvent};
use serde::Deserialize;

use crate::error::CliError;

/// One JSON run description. Blocks a subcommand does not read may be
/// omitted.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ConverterParams,
    pub event: StepEvent,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default)]
    pub output: Output,
    pub sweep: Option<SweepBlock>,
    pub descent: Option<DescentBlock>,
    pub audit: Option<AuditBlock>,
    pub reference: Option<Reference>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solver {
    /// Sample step, s.
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub steps_per_cycle: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
    /// Where `predict` writes the sampled waveform, as CSV.
    pub waveform: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub axis1: Axis,
    pub axis2: Axis,
    #[serde(default = "default_metric")]
    pub metric: Metric,
}

fn default_metric() -> Metric {
    Metric::VMax
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescentBlock {
    pub free: Vec<Parameter>,
    #[serde(default = "default_constraint")]
    pub constraint: Constraint,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_constraint() -> Constraint {
    Constraint::None
}

fn default_max_steps() -> usize {
    50
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditBlock {
    pub t0: f64,
    pub t1: f64,
}

pub const DEFAULT_STEPS_PER_CYCLE: usize = 100;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let message = inner.to_string();
            CliError::Config {
                field: field_name(&path, &message),
                message,
            }
        })
    }

    pub fn t_end(&self) -> Result<f64, CliError> {
        self.solver.t_end.ok_or_else(|| CliError::missing("solver.t_end"))
    }

    pub fn steps_per_cycle(&self) -> usize {
        self.solver.steps_per_cycle.unwrap_or(DEFAULT_STEPS_PER_CYCLE)
    }

    pub fn sweep(&self) -> Result<&SweepBlock, CliError> {
        self.sweep.as_ref().ok_or_else(|| CliError::missing("sweep"))
    }

    pub fn descent(&self) -> Result<&DescentBlock, CliError> {
        self.descent.as_ref().ok_or_else(|| CliError::missing("descent"))
    }

    pub fn audit(&self) -> Result<AuditBlock, CliError> {
        self.audit.ok_or_else(|| CliError::missing("audit"))
    }
}

// serde names the offending key in backticks for missing and unknown
// fields; the path locates the enclosing block
fn field_name(path: &str, message: &str) -> Option<String> {
    let key = message.split('`').nth(1).filter(|_| message.contains(" field `"));
    let path = Some(path).filter(|p| !p.is_empty() && *p != ".");
    match (path, key) {
        (Some(p), Some(k)) if !p.ends_with(k) => Some(format!("{p}.{k}")),
        (Some(p), _) => Some(p.to_string()),
        (None, Some(k)) => Some(k.to_string()),
        (None, None) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "params": {"v_i": 3.3, "l": 1e-3, "r_l": 1.5, "c": 42e-6, "r_c": 1.3,
                   "r_m": 0.9, "v_d": 0.5, "r_0": 92, "d": 0.49, "f_sw": 1e4},
        "event": {"kind": "input_voltage", "before": 0, "after": 3.3, "t_event": 0}
    }"#;

    fn err_field(text: &str) -> Option<String> {
        match RunConfig::parse(text) {
            Err(CliError::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_parses() {
        let c = RunConfig::parse(BASE).unwrap();
        assert_eq!(c.params.d, 0.49);
        assert_eq!(c.steps_per_cycle(), DEFAULT_STEPS_PER_CYCLE);
        assert!(c.t_end().is_err());
    }

    #[test]
    fn missing_duty_is_named() {
        let text = BASE.replace(", \"d\": 0.49", "");
        assert_eq!(err_field(&text).as_deref(), Some("params.d"));
    }

    #[test]
    fn typo_is_named() {
        let text = BASE.replace("\"r_m\"", "\"rm\"");
        assert_eq!(err_field(&text).as_deref(), Some("params.rm"));
        let text = BASE.replace("\"event\"", "\"solver\": {\"tend\": 1}, \"event\"");
        assert_eq!(err_field(&text).as_deref(), Some("solver.tend"));
    }

    #[test]
    fn optional_blocks() {
        let text = BASE.replace(
            "\"event\"",
            r#""descent": {"free": ["l", "c"], "constraint": {"kind": "constant-steady-output"}},
               "sweep": {"axis1": {"param": "v_i", "lo": 1, "hi": 10, "n": 4},
                         "axis2": {"param": "d", "lo": 0.3, "hi": 0.7, "n": 4}},
               "event""#,
        );
        let c = RunConfig::parse(&text).unwrap();
        assert_eq!(c.descent().unwrap().constraint, Constraint::ConstantSteadyOutput);
        assert_eq!(c.descent().unwrap().max_steps, 50);
        assert_eq!(c.sweep().unwrap().metric, Metric::VMax);
    }
}
