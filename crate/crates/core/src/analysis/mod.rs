//! Error metrics, predictions from the closed-form models, model comparison,
//! parameter sweeps and overshoot-mitigation paths.

mod compare;
mod descent;
mod sweep;

pub use compare::{compare_models, CompareConfig, ComparisonRow, ComparisonTable, Reference};
pub use descent::{scenario_predict, steepest_descent, Constraint, DescentPath, PathPoint, ScenarioReport};
pub use sweep::{sweep, Axis, Metric, SweepGrid, SweepSpec};

use serde::{Deserialize, Serialize};

use crate::circuit::{ConverterParams, Excursion, ResponseMetrics, StepEvent, StepKind, Waveform};
use crate::error::{Error, Flag, Result};
use crate::{ebm, refmodel, tfm_line, tfm_load};

/// `|y - ŷ| / y × 100`.
pub fn error_percent(y_actual: f64, y_fit: f64) -> Result<f64> {
    if y_actual == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((y_actual - y_fit).abs() / y_actual.abs() * 100.0)
}

/// Root-mean-square difference of two waveforms on the same grid.
pub fn rmse(actual: &Waveform, fit: &Waveform) -> Result<f64> {
    if !actual.same_grid(fit) {
        return Err(Error::GridMismatch);
    }
    let sum: f64 = actual
        .samples()
        .iter()
        .zip(fit.samples())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum / actual.len() as f64).sqrt())
}

/// Steady value and first extremum read off a sampled response.
///
/// The steady value is the mean of the final 10% of samples, which must
/// vary by less than 0.5% of it. The extremum is the largest post-event
/// sample for a rising response (smallest for a falling one), refined by a
/// parabola through it and its neighbours.
pub fn extract_metrics(w: &Waveform, t_event: f64) -> Result<ResponseMetrics> {
    let s = w.samples();
    let n = s.len();
    let tail = &s[n - (n / 10).max(1)..];
    let v_steady = tail.iter().sum::<f64>() / tail.len() as f64;
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let spread = if v_steady != 0.0 {
        (hi - lo) / v_steady.abs()
    } else {
        hi - lo
    };
    if spread >= 0.005 {
        return Err(Error::NotSettled(spread));
    }
    let start = (((t_event - w.t0()) / w.dt()).round().max(0.0) as usize).min(n - 1);
    let v_start = s[start];
    let falling = v_steady < v_start;
    let sign = if falling { -1.0 } else { 1.0 };
    let (k, _) = s[start..]
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bk, bv), (k, &v)| {
            if sign * v > bv {
                (k, sign * v)
            } else {
                (bk, bv)
            }
        });
    let k = start + k;
    let (mut t_peak, mut v_peak) = (w.time(k), s[k]);
    if k > start && k + 1 < n {
        let (y0, y1, y2) = (s[k - 1], s[k], s[k + 1]);
        let curvature = y0 - 2.0 * y1 + y2;
        if curvature != 0.0 {
            let offset = 0.5 * (y0 - y2) / curvature;
            if offset.abs() <= 1.0 {
                t_peak += offset * w.dt();
                v_peak = y1 - 0.25 * (y0 - y2) * offset;
            }
        }
    }
    let excursion = if falling {
        Excursion::Undershoot
    } else {
        Excursion::Overshoot
    };
    Ok(ResponseMetrics::new(
        v_steady,
        v_peak,
        Some(t_peak - t_event),
        excursion,
    ))
}

/// Closed-form model selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Ebm,
    Tfm,
    Fr,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Ebm => "ebm",
            Model::Tfm => "tfm",
            Model::Fr => "fr",
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ebm" => Ok(Model::Ebm),
            "tfm" => Ok(Model::Tfm),
            "fr" => Ok(Model::Fr),
            other => Err(Error::UnsupportedModel(other.to_string())),
        }
    }
}

/// Metrics and diagnostic flags of one closed-form prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub model: Model,
    #[serde(flatten)]
    pub metrics: ResponseMetrics,
    pub flags: Vec<Flag>,
}

/// Binds the event's stepped quantity to the parameter set: input events
/// take their final voltage from `p.v_i`, load events their initial load
/// from `p.r_0`.
pub fn bind_event(event: &StepEvent, p: &ConverterParams) -> StepEvent {
    match event.kind {
        StepKind::InputVoltage => StepEvent {
            value_after: p.v_i,
            ..*event
        },
        StepKind::LoadResistance => StepEvent {
            value_before: p.r_0,
            ..*event
        },
    }
}

/// Steady value and first extremum of `model` after `event`.
pub fn predict(p: &ConverterParams, event: &StepEvent, model: Model) -> Result<Prediction> {
    let event = event.validate()?;
    let (metrics, mut flags) = match (model, event.kind) {
        (Model::Ebm, _) => {
            let form = ebm::form_for_event(p, &event)?;
            (ebm::ebm_metrics(&form), form.flags())
        }
        (Model::Tfm, StepKind::InputVoltage) => {
            let (tf, _, _) = tfm_line::tf_for_input_step(p, event.value_before, event.value_after)?;
            (tfm_line::line_metrics(p, &event)?, tf.flags())
        }
        (Model::Tfm, StepKind::LoadResistance) => {
            let before = event.params_before(p);
            let tf = tfm_load::load_tf_corrected(&before, event.delta())?;
            let modes = tfm_load::invert_quartic_tf(&tf)?;
            (tfm_load::load_metrics(&before, event.delta())?, modes.flags)
        }
        (Model::Fr, _) => refmodel::fr_metrics(p, &event)?,
    };
    if !metrics.has_peak() && !flags.contains(&Flag::NoTransient) {
        flags.push(Flag::NoPeak);
    }
    Ok(Prediction { model, metrics, flags })
}

/// Model output `t` seconds after the event.
pub fn response_after_event(p: &ConverterParams, event: &StepEvent, model: Model, t: f64) -> Result<f64> {
    match (model, event.kind) {
        (Model::Ebm, _) => ebm::ebm_response(&ebm::form_for_event(p, event)?, t),
        (Model::Tfm, StepKind::InputVoltage) => tfm_line::line_event_response(p, event, t),
        (Model::Tfm, StepKind::LoadResistance) => tfm_load::load_event_response(p, event, t),
        (Model::Fr, _) => refmodel::fr_event_response(p, event, t).map(|(v, _)| v),
    }
}

/// Output before the event, where the closed forms are flat.
fn pre_event_level(p: &ConverterParams, event: &StepEvent, model: Model) -> Result<f64> {
    if event.is_startup() {
        return Ok(0.0);
    }
    let before = event.params_before(p);
    match model {
        Model::Fr => refmodel::fr_steady_output(&before),
        _ => crate::steady::steady_output(&before),
    }
}

/// Model output sampled on `t = k·dt`, `k = 0..=round(t_end/dt)`, flat at
/// the pre-event level until the event.
pub fn predict_waveform(p: &ConverterParams, event: &StepEvent, model: Model, dt: f64, t_end: f64) -> Result<Waveform> {
    let event = event.validate()?;
    if !(dt > 0.0 && t_end > 0.0 && dt.is_finite() && t_end.is_finite()) {
        return Err(Error::InvalidSolver(format!("sampling dt={dt}, t_end={t_end}")));
    }
    let n = (t_end / dt).round() as usize + 1;
    let level = pre_event_level(p, &event, model)?;
    // sample-aligned event, as in the simulators
    let k_event = (event.t_event / dt).round() as usize;
    let mut k = 0usize;
    Waveform::from_fn(0.0, dt, n, |t| {
        let idx = k;
        k += 1;
        if idx < k_event {
            Ok(level)
        } else {
            response_after_event(p, &event, model, t - k_event as f64 * dt)
        }
    })
}
