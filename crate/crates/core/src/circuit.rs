//! Domain types shared by every model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Component set of the non-ideal boost converter.
///
/// Every field is SI. `f_sw` is carried even by the averaged models so that
/// the switched simulator and the closed forms always read one record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConverterParams {
    /// Input voltage, V.
    pub v_i: f64,
    /// Inductance, H.
    pub l: f64,
    /// Inductor series resistance, ohm.
    pub r_l: f64,
    /// Output capacitance, F.
    pub c: f64,
    /// Capacitor series resistance, ohm.
    pub r_c: f64,
    /// MOSFET on-resistance, ohm.
    pub r_m: f64,
    /// Diode forward drop, V.
    pub v_d: f64,
    /// Load resistance, ohm.
    pub r_0: f64,
    /// PWM duty cycle, in (0, 1).
    pub d: f64,
    /// Switching frequency, Hz.
    pub f_sw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamViolation {
    NonPositiveComponent { name: &'static str, value: f64 },
    DutyOutOfRange { value: f64 },
    NegativeParasitic { name: &'static str, value: f64 },
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamViolation::NonPositiveComponent { name, value } => {
                write!(f, "NonPositiveComponent: {name} = {value} must be > 0")
            }
            ParamViolation::DutyOutOfRange { value } => {
                write!(f, "DutyOutOfRange: d = {value} must lie in (0, 1)")
            }
            ParamViolation::NegativeParasitic { name, value } => {
                write!(f, "NegativeParasitic: {name} = {value} must be >= 0")
            }
        }
    }
}

impl ConverterParams {
    /// Returns `self` unchanged when every invariant holds, otherwise every
    /// violated invariant.
    pub fn validate(self) -> std::result::Result<Self, Vec<ParamViolation>> {
        let mut bad = Vec::new();
        for (name, value) in [("l", self.l), ("c", self.c), ("r_0", self.r_0), ("f_sw", self.f_sw)] {
            // written so that NaN fails
            if !(value > 0.0 && value.is_finite()) {
                bad.push(ParamViolation::NonPositiveComponent { name, value });
            }
        }
        if !(self.d > 0.0 && self.d < 1.0) {
            bad.push(ParamViolation::DutyOutOfRange { value: self.d });
        }
        for (name, value) in [
            ("r_l", self.r_l),
            ("r_c", self.r_c),
            ("r_m", self.r_m),
            ("v_d", self.v_d),
            ("v_i", self.v_i),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                bad.push(ParamViolation::NegativeParasitic { name, value });
            }
        }
        if bad.is_empty() {
            Ok(self)
        } else {
            Err(bad)
        }
    }

    /// [`validate`](Self::validate) mapped into the crate error type.
    pub fn checked(self) -> Result<Self> {
        self.validate().map_err(Error::InvalidParams)
    }

    /// Switching period, s.
    pub fn period(&self) -> f64 {
        1.0 / self.f_sw
    }

    /// Same record with `R_L`, `R_C`, `R_M` and `V_d` set to zero.
    pub fn without_parasitics(&self) -> Self {
        Self {
            r_l: 0.0,
            r_c: 0.0,
            r_m: 0.0,
            v_d: 0.0,
            ..*self
        }
    }

    pub fn with(&self, param: Parameter, value: f64) -> Self {
        let mut p = *self;
        p.set(param, value);
        p
    }

    pub fn get(&self, param: Parameter) -> f64 {
        match param {
            Parameter::Vi => self.v_i,
            Parameter::D => self.d,
            Parameter::L => self.l,
            Parameter::C => self.c,
            Parameter::R0 => self.r_0,
            Parameter::RL => self.r_l,
            Parameter::RC => self.r_c,
            Parameter::RM => self.r_m,
            Parameter::Vd => self.v_d,
        }
    }

    pub fn set(&mut self, param: Parameter, value: f64) {
        let slot = match param {
            Parameter::Vi => &mut self.v_i,
            Parameter::D => &mut self.d,
            Parameter::L => &mut self.l,
            Parameter::C => &mut self.c,
            Parameter::R0 => &mut self.r_0,
            Parameter::RL => &mut self.r_l,
            Parameter::RC => &mut self.r_c,
            Parameter::RM => &mut self.r_m,
            Parameter::Vd => &mut self.v_d,
        };
        *slot = value;
    }
}

/// Component parameters that sweeps and descent paths may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parameter {
    #[serde(rename = "v_i")]
    Vi,
    #[serde(rename = "d")]
    D,
    #[serde(rename = "l")]
    L,
    #[serde(rename = "c")]
    C,
    #[serde(rename = "r_0")]
    R0,
    #[serde(rename = "r_l")]
    RL,
    #[serde(rename = "r_c")]
    RC,
    #[serde(rename = "r_m")]
    RM,
    #[serde(rename = "v_d")]
    Vd,
}

impl Parameter {
    pub const ALL: [Parameter; 9] = [
        Parameter::Vi,
        Parameter::D,
        Parameter::L,
        Parameter::C,
        Parameter::R0,
        Parameter::RL,
        Parameter::RC,
        Parameter::RM,
        Parameter::Vd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Parameter::Vi => "v_i",
            Parameter::D => "d",
            Parameter::L => "l",
            Parameter::C => "c",
            Parameter::R0 => "r_0",
            Parameter::RL => "r_l",
            Parameter::RC => "r_c",
            Parameter::RM => "r_m",
            Parameter::Vd => "v_d",
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Parameter::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownParameter(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    InputVoltage,
    LoadResistance,
}

/// A disturbance applied at `t_event`: the input voltage or the load
/// resistance jumps from `value_before` to `value_after`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepEvent {
    pub kind: StepKind,
    #[serde(rename = "before")]
    pub value_before: f64,
    #[serde(rename = "after")]
    pub value_after: f64,
    pub t_event: f64,
}

impl StepEvent {
    pub fn input(before: f64, after: f64, t_event: f64) -> Self {
        Self {
            kind: StepKind::InputVoltage,
            value_before: before,
            value_after: after,
            t_event,
        }
    }

    /// Input step from rest, at `t = 0`.
    pub fn startup(v_i: f64) -> Self {
        Self::input(0.0, v_i, 0.0)
    }

    pub fn load(before: f64, after: f64, t_event: f64) -> Self {
        Self {
            kind: StepKind::LoadResistance,
            value_before: before,
            value_after: after,
            t_event,
        }
    }

    pub fn delta(&self) -> f64 {
        self.value_after - self.value_before
    }

    pub fn is_startup(&self) -> bool {
        self.kind == StepKind::InputVoltage && self.value_before == 0.0
    }

    pub fn validate(self) -> Result<Self> {
        let finite = self.value_before.is_finite() && self.value_after.is_finite();
        if !finite || !(self.t_event >= 0.0 && self.t_event.is_finite()) {
            return Err(Error::InvalidEvent(format!(
                "non-finite value or negative time in {self:?}"
            )));
        }
        match self.kind {
            StepKind::InputVoltage if self.value_before < 0.0 || self.value_after < 0.0 => {
                Err(Error::InvalidEvent("input voltages must be non-negative".into()))
            }
            StepKind::LoadResistance if self.value_before <= 0.0 || self.value_after <= 0.0 => {
                Err(Error::InvalidEvent("load resistances must be positive".into()))
            }
            _ => Ok(self),
        }
    }

    /// Parameters in force before the event.
    pub fn params_before(&self, p: &ConverterParams) -> ConverterParams {
        self.apply(p, self.value_before)
    }

    /// Parameters in force after the event.
    pub fn params_after(&self, p: &ConverterParams) -> ConverterParams {
        self.apply(p, self.value_after)
    }

    fn apply(&self, p: &ConverterParams, value: f64) -> ConverterParams {
        match self.kind {
            StepKind::InputVoltage => ConverterParams { v_i: value, ..*p },
            StepKind::LoadResistance => ConverterParams { r_0: value, ..*p },
        }
    }
}

/// Uniformly sampled output-voltage series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Waveform {
    t0: f64,
    dt: f64,
    samples: Vec<f64>,
}

impl Waveform {
    pub fn new(t0: f64, dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || !t0.is_finite() {
            return Err(Error::InvalidWaveform(format!("bad time base t0={t0}, dt={dt}")));
        }
        if samples.is_empty() {
            return Err(Error::InvalidWaveform("no samples".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidWaveform(format!("sample {i} is not finite")));
        }
        Ok(Self { t0, dt, samples })
    }

    /// Samples `f` at `t0 + k·dt` for `k = 0..n`.
    pub fn from_fn(t0: f64, dt: f64, n: usize, mut f: impl FnMut(f64) -> Result<f64>) -> Result<Self> {
        let samples = (0..n).map(|k| f(t0 + k as f64 * dt)).collect::<Result<Vec<_>>>()?;
        Self::new(t0, dt, samples)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.samples.len() - 1)
    }

    pub fn last(&self) -> f64 {
        self.samples[self.samples.len() - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.samples.iter().enumerate().map(|(k, &v)| (self.time(k), v))
    }

    pub fn same_grid(&self, other: &Waveform) -> bool {
        self.len() == other.len()
            && (self.t0 - other.t0).abs() <= 1e-12 * self.dt
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt
    }

    /// Centered moving average over `window` samples. Near the ends the
    /// window is shifted inward so it always spans `window` samples (or the
    /// whole series, if shorter).
    pub fn moving_average(&self, window: usize) -> Waveform {
        let n = self.samples.len();
        let window = window.clamp(1, n);
        let half = window / 2;
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        for v in &self.samples {
            prefix.push(prefix[prefix.len() - 1] + v);
        }
        let samples = (0..n)
            .map(|k| {
                let lo = k.saturating_sub(half).min(n - window);
                let hi = lo + window;
                (prefix[hi] - prefix[lo]) / window as f64
            })
            .collect();
        Waveform {
            t0: self.t0,
            dt: self.dt,
            samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Excursion {
    Overshoot,
    Undershoot,
}

/// Steady value and first transient extremum of a response.
///
/// `v_max` is the extreme value of the first excursion: a maximum for
/// responses heading upward, a minimum for responses heading downward (see
/// `excursion`). Monotone responses report `v_max = v_steady` and no `t_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseMetrics {
    pub v_steady: f64,
    pub v_max: f64,
    /// Time from the event to the extremum, s.
    pub t_p: Option<f64>,
    pub overshoot_pct: f64,
    pub excursion: Excursion,
}

impl ResponseMetrics {
    pub fn new(v_steady: f64, v_max: f64, t_p: Option<f64>, excursion: Excursion) -> Self {
        let overshoot_pct = if v_steady != 0.0 {
            (v_max - v_steady) / v_steady.abs() * 100.0
        } else {
            0.0
        };
        Self {
            v_steady,
            v_max,
            t_p,
            overshoot_pct,
            excursion,
        }
    }

    pub fn no_peak(v_steady: f64) -> Self {
        Self::new(v_steady, v_steady, None, Excursion::Overshoot)
    }

    pub fn has_peak(&self) -> bool {
        self.t_p.is_some()
    }
}
