use serde::{Deserialize, Serialize};

use super::{error_percent, extract_metrics, predict, predict_waveform, rmse, Model};
use crate::circuit::{ConverterParams, ResponseMetrics, StepEvent, Waveform};
use crate::error::{Error, Flag, Result};
use crate::oracle::{self, AveragedConfig};

/// What the error columns are measured against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Reference {
    /// Another row of the same table, by name.
    Row { name: String },
    /// Scalars measured elsewhere; no waveform, so no RMSE.
    Measured { v_steady: f64, v_max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    /// Simulated span, s.
    pub t_end: f64,
    pub steps_per_cycle: usize,
    pub reference: Reference,
}

impl CompareConfig {
    pub fn against_switched(t_end: f64) -> Self {
        Self {
            t_end,
            steps_per_cycle: 100,
            reference: Reference::Row {
                name: "switched".into(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub model: String,
    pub v_steady: f64,
    pub v_max: f64,
    pub t_p: Option<f64>,
    pub steady_error_pct: f64,
    pub dynamic_error_pct: f64,
    pub rmse: Option<f64>,
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub reference: Reference,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn row(&self, name: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.model == name)
    }
}

pub const ROW_NAMES: [&str; 6] = ["ebm", "tfm", "fr", "avg+par", "avg-par", "switched"];

/// Every model and both oracles on one event, with errors against the
/// reference.
///
/// All waveforms share the switched simulator's step grid; the averaged
/// model is integrated on a subdivision of it when the grid step exceeds
/// its stability limit. Closed-form rows report their analytic metrics;
/// oracle rows are read off their waveforms, the switched one after
/// averaging over each switching period.
pub fn compare_models(p: &ConverterParams, event: &StepEvent, config: &CompareConfig) -> Result<ComparisonTable> {
    let p = p.checked()?;
    let event = event.validate()?;
    let h = p.period() / config.steps_per_cycle as f64;
    let n = (config.t_end / h).round() as usize;
    let t_end = n as f64 * h;
    let events = [event];

    let mut rows: Vec<(ComparisonRow, Waveform)> = Vec::with_capacity(ROW_NAMES.len());
    for model in [Model::Ebm, Model::Tfm, Model::Fr] {
        let pred = predict(&p, &event, model)?;
        let w = predict_waveform(&p, &event, model, h, t_end)?;
        rows.push((row(model.name(), &pred.metrics, pred.flags), w));
    }
    for (name, include_parasitics) in [("avg+par", true), ("avg-par", false)] {
        let w = averaged_on_grid(&p, &events, h, n, include_parasitics)?;
        let m = extract_metrics(&w, event.t_event)?;
        rows.push((row(name, &m, Vec::new()), w));
    }
    let run = oracle::simulate_switched(&p, &events, config.steps_per_cycle, t_end)?;
    let w = run.cycle_averaged();
    let m = extract_metrics(&w, event.t_event)?;
    rows.push((row("switched", &m, run.flags.clone()), w));

    let (ref_steady, ref_max, ref_wave) = match &config.reference {
        Reference::Row { name } => {
            let (r, w) = rows
                .iter()
                .find(|(r, _)| &r.model == name)
                .ok_or_else(|| Error::UnsupportedModel(format!("no comparison row named `{name}`")))?;
            (r.v_steady, r.v_max, Some(w.clone()))
        }
        Reference::Measured { v_steady, v_max } => (*v_steady, *v_max, None),
    };
    let mut out = Vec::with_capacity(rows.len());
    for (mut r, w) in rows {
        r.steady_error_pct = error_percent(ref_steady, r.v_steady)?;
        r.dynamic_error_pct = error_percent(ref_max, r.v_max)?;
        r.rmse = match &ref_wave {
            Some(rw) => Some(rmse(rw, &w)?),
            None => None,
        };
        out.push(r);
    }
    Ok(ComparisonTable {
        reference: config.reference.clone(),
        rows: out,
    })
}

fn row(name: &str, m: &ResponseMetrics, flags: Vec<Flag>) -> ComparisonRow {
    ComparisonRow {
        model: name.to_string(),
        v_steady: m.v_steady,
        v_max: m.v_max,
        t_p: m.t_p,
        steady_error_pct: 0.0,
        dynamic_error_pct: 0.0,
        rmse: None,
        flags,
    }
}

// averaged model on the grid k·h, k = 0..=n
fn averaged_on_grid(
    p: &ConverterParams,
    events: &[StepEvent],
    h: f64,
    n: usize,
    include_parasitics: bool,
) -> Result<Waveform> {
    let sim_p = if include_parasitics { *p } else { p.without_parasitics() };
    let limit = oracle::averaged_step_limit(&sim_p);
    let sub = (h / limit).ceil().max(1.0) as usize;
    let dt = h / sub as f64;
    let config = AveragedConfig {
        dt,
        t_end: n as f64 * h,
        include_parasitics,
    };
    let fine = oracle::simulate_averaged(p, events, &config)?;
    let samples: Vec<f64> = fine.samples().iter().step_by(sub).take(n + 1).copied().collect();
    Waveform::new(0.0, h, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{load_method1, method1};

    #[test]
    fn startup_table_has_every_row() {
        let p = method1();
        let table = compare_models(&p, &StepEvent::startup(p.v_i), &CompareConfig::against_switched(0.08)).unwrap();
        let names: Vec<&str> = table.rows.iter().map(|r| r.model.as_str()).collect();
        assert_eq!(names, ROW_NAMES);
        let sw = table.row("switched").unwrap();
        assert_eq!(sw.steady_error_pct, 0.0);
        assert_eq!(sw.rmse, Some(0.0));
        let tfm = table.row("tfm").unwrap();
        assert!(tfm.steady_error_pct < 3.0, "{tfm:?}");
        let ebm = table.row("ebm").unwrap();
        assert!((ebm.v_max - tfm.v_max).abs() / ebm.v_max < 0.05);
    }

    #[test]
    fn measured_reference_reproduces_published_errors() {
        let p = method1();
        let config = CompareConfig {
            reference: Reference::Measured {
                v_steady: 5.35,
                v_max: 6.74,
            },
            ..CompareConfig::against_switched(0.08)
        };
        let table = compare_models(&p, &StepEvent::startup(p.v_i), &config).unwrap();
        let tfm = table.row("tfm").unwrap();
        assert!((tfm.steady_error_pct - 1.9).abs() < 0.2);
        assert!((tfm.dynamic_error_pct - 5.0).abs() < 0.2);
        assert!(tfm.rmse.is_none());
    }

    #[test]
    fn reference_model_misses_the_load_transient() {
        let p = load_method1();
        let config = CompareConfig {
            reference: Reference::Measured {
                v_steady: 8.80,
                v_max: 13.43,
            },
            ..CompareConfig::against_switched(0.1)
        };
        let table = compare_models(&p, &StepEvent::load(10.0, 150.0, 0.005), &config).unwrap();
        let fr = table.row("fr").unwrap();
        assert_eq!(fr.flags, vec![Flag::NoTransient]);
        assert!(fr.dynamic_error_pct > 20.0);
        let tfm = table.row("tfm").unwrap();
        assert!(tfm.dynamic_error_pct < fr.dynamic_error_pct);
    }

    #[test]
    fn unknown_reference_row() {
        let p = method1();
        let config = CompareConfig {
            reference: Reference::Row { name: "spice".into() },
            ..CompareConfig::against_switched(0.08)
        };
        assert!(compare_models(&p, &StepEvent::startup(p.v_i), &config).is_err());
    }
}
