//! Transient and steady-state models of a non-ideal boost DC-DC converter.
//!
//! The crate bundles two closed-form first-principle models of the averaged
//! output voltage (an energy-balance second-order ODE and a pair of transfer
//! functions for input-voltage and load-resistance steps), the conventional
//! lossless reference model, and numerical oracles (an averaged-model
//! integrator and a cycle-by-cycle switched simulator with an energy audit).
//! [`analysis`] ties them together: error metrics, model comparison tables,
//! parameter sweeps and overshoot-mitigation descent paths.
//!
//! All quantities are SI: volts, amps, ohms, henries, farads, seconds.

// `!(x > 0.0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod circuit;
pub mod ebm;
pub mod error;
pub mod oracle;
pub mod poly;
pub mod refmodel;
pub mod steady;
pub mod tfm_line;
pub mod tfm_load;

#[cfg(test)]
mod fixtures;

pub use circuit::{
    ConverterParams, Excursion, ParamViolation, Parameter, ResponseMetrics, StepEvent, StepKind, Waveform,
};
pub use error::{Error, Flag, Result};
