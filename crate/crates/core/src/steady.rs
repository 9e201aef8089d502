//! Steady-state operating point of the non-ideal converter in continuous
//! conduction.

use crate::circuit::ConverterParams;
use crate::error::{Error, Flag, Result};

/// Output voltage and average currents at the steady operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    /// Output voltage, V.
    pub v_o: f64,
    /// Average inductor current `I_1`, A.
    pub i_1: f64,
    /// Average output-side (diode) current `I_2 = (1 - D) I_1`, A.
    pub i_2: f64,
    pub flags: Vec<Flag>,
}

/// Loss-aware denominator `(1-D)²R_0 + R_L + D·R_M + (1-D)²R_C`.
pub(crate) fn loss_denominator(p: &ConverterParams) -> f64 {
    let m = (1.0 - p.d) * (1.0 - p.d);
    m * p.r_0 + p.r_l + p.d * p.r_m + m * p.r_c
}

pub fn operating_point(p: &ConverterParams) -> Result<OperatingPoint> {
    let p = p.checked()?;
    let den = loss_denominator(&p);
    if !(den > 0.0) {
        return Err(Error::DegenerateDenominator(den));
    }
    let one_minus_d = 1.0 - p.d;
    // (1-D)V_i - (1-D)²V_d: net drive once the diode drop is paid
    let drive = one_minus_d * p.v_i - one_minus_d * one_minus_d * p.v_d;
    let mut flags = Vec::new();
    let drive = if drive < 0.0 {
        flags.push(Flag::DischargedSource);
        0.0
    } else {
        drive
    };
    let i_2 = drive / den;
    Ok(OperatingPoint {
        v_o: i_2 * p.r_0,
        i_1: i_2 / one_minus_d,
        i_2,
        flags,
    })
}

/// Steady output voltage including every parasitic, in closed form.
///
/// `V_o = V_i[(1-D)R_0 - (V_d/V_i)(1-D)²R_0] / [(1-D)²R_0 + R_L + D·R_M + (1-D)²R_C]`.
/// Clamped at 0 V when the source cannot overcome the diode drop.
pub fn steady_output(p: &ConverterParams) -> Result<f64> {
    operating_point(p).map(|op| op.v_o)
}

/// Average currents `(I_2, I_1)` at the operating point.
pub fn steady_inductor_current(p: &ConverterParams) -> Result<(f64, f64)> {
    operating_point(p).map(|op| (op.i_2, op.i_1))
}

/// Lossless boost gain `V_i / (1 - D)`.
pub fn ideal_steady_output(p: &ConverterParams) -> Result<f64> {
    let p = p.checked()?;
    Ok(p.v_i / (1.0 - p.d))
}
