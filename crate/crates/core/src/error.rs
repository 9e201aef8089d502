use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::circuit::ParamViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid converter parameters: {}", join_violations(.0))]
    InvalidParams(Vec<ParamViolation>),
    #[error("invalid step event: {0}")]
    InvalidEvent(String),
    #[error("steady-state denominator is not positive ({0})")]
    DegenerateDenominator(f64),
    #[error("input voltage must be positive for the line transfer function")]
    ZeroInputVoltage,
    #[error("time must be finite and non-negative, got {0}")]
    InvalidTime(f64),
    #[error("post-step load resistance must be positive, got {0} ohm")]
    InvalidPostLoad(f64),
    #[error("empirical load correction factor is {0}, outside its fitted domain (must be > 0)")]
    CorrectionOutOfDomain(f64),
    #[error("transfer function denominator has repeated roots")]
    RepeatedRoots,
    #[error("root finder did not converge in {0} iterations")]
    RootsNotConverged(usize),
    #[error("the transfer function is not underdamped")]
    OverdampedTf,
    #[error("integration step {dt} s exceeds the limit {limit} s")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("invalid solver setting: {0}")]
    InvalidSolver(String),
    #[error("simulation state became non-finite at t = {0} s")]
    NonFiniteState(f64),
    #[error("audit window [{t0}, {t1}] lies outside the simulated trace")]
    WindowOutOfRange { t0: f64, t1: f64 },
    #[error("reference value is zero")]
    ZeroReference,
    #[error("waveforms are sampled on different grids")]
    GridMismatch,
    #[error("waveform has not settled over its final 10% (spread {0:.3e} relative)")]
    NotSettled(f64),
    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),
    #[error("unsupported sweep axes: {0}")]
    UnsupportedAxisPair(String),
    #[error("unsupported model for this event: {0}")]
    UnsupportedModel(String),
    #[error("constraint projection failed: {0}")]
    ConstraintInfeasible(String),
    #[error("unknown parameter name `{0}`")]
    UnknownParameter(String),
}

fn join_violations(v: &[ParamViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Non-fatal conditions attached to results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    /// Damping ratio is at or above one; no oscillatory overshoot.
    OverdampedSystem,
    /// Transfer function has real poles; the real-pole inversion was used.
    OverdampedTf,
    /// Input voltage cannot overcome the diode drop; output clamped at zero.
    DischargedSource,
    /// A denominator root has a non-negative real part.
    UnstableRoots,
    /// Inductor current reached zero; closed-form models assume continuous conduction.
    DiscontinuousConduction,
    /// Monotone response without an interior extremum.
    NoPeak,
    /// Output is two steady segments stitched at the event time.
    NoTransient,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Flag::OverdampedSystem => "overdamped-system",
            Flag::OverdampedTf => "overdamped-tf",
            Flag::DischargedSource => "discharged-source",
            Flag::UnstableRoots => "unstable-roots",
            Flag::DiscontinuousConduction => "discontinuous-conduction",
            Flag::NoPeak => "no-peak",
            Flag::NoTransient => "no-transient",
        };
        f.write_str(s)
    }
}
