//! Transfer-function model for load-resistance steps.
//!
//! The output deviation after `R_0 → R_0 + ΔR_0` is
//! `ΔV_o(s) = I_2·ΔR_0·N(s)/(s·D(s))` with quartic `N` and `D`. The
//! denominator is inverted by partial fractions over its four roots.

use num_complex::Complex64;

use crate::circuit::{ConverterParams, Excursion, ResponseMetrics, StepEvent, StepKind};
use crate::ebm::first_extremum;
use crate::error::{Error, Flag, Result};
use crate::poly;
use crate::steady;

/// Quartic load-to-output transfer function, descending powers of `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticTF {
    /// `[a, b, c, d, f]`.
    pub den: [f64; 5],
    /// `[g, h, j, k, l]`.
    pub num: [f64; 5],
    /// Output-side current at the pre-step operating point, A.
    pub gain_i2: f64,
    pub delta_r0: f64,
}

impl QuarticTF {
    /// `N(s)/D(s)`, without the `I_2` prefactor.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        poly::eval_real(&self.num, s) / poly::eval_real(&self.den, s)
    }

    /// `l/f`.
    pub fn dc_gain(&self) -> f64 {
        self.num[4] / self.den[4]
    }

    /// `g/a`, the instantaneous part carried by the capacitor ESR.
    pub fn high_frequency_gain(&self) -> f64 {
        self.num[0] / self.den[0]
    }

    /// Whole-step scale `I_2·ΔR_0`, V.
    pub fn step_scale(&self) -> f64 {
        self.gain_i2 * self.delta_r0
    }
}

/// Offset plus a sum of complex exponential modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpModeSum {
    /// Final value of the deviation, V.
    pub offset: f64,
    /// `(residue, root)` pairs; complex entries come in conjugate pairs.
    pub modes: Vec<(Complex64, Complex64)>,
    pub flags: Vec<Flag>,
}

impl ExpModeSum {
    pub fn evaluate(&self, t: f64) -> f64 {
        self.offset + self.modes.iter().map(|&(r, x)| (r * (x * t).exp()).re).sum::<f64>()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.modes.iter().map(|&(r, x)| (r * x * (x * t).exp()).re).sum()
    }

    /// Slowest decay rate among the modes, 1/s.
    pub fn slowest_decay(&self) -> f64 {
        self.modes.iter().map(|&(_, x)| -x.re).fold(f64::INFINITY, f64::min)
    }

    /// Largest oscillation frequency among the modes, rad/s (0 if all real).
    pub fn fastest_oscillation(&self) -> f64 {
        self.modes.iter().map(|&(_, x)| x.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_stable(&self) -> bool {
        self.modes.iter().all(|&(_, x)| x.re < 0.0)
    }
}

fn check_post_load(p: &ConverterParams, delta_r0: f64) -> Result<ConverterParams> {
    let p = p.checked()?;
    let r2 = p.r_0 + delta_r0;
    if !(delta_r0.is_finite() && r2 > 0.0) {
        return Err(Error::InvalidPostLoad(r2));
    }
    Ok(p)
}

/// The ten coefficients of the load transfer function before correction.
///
/// With `P = R_0 + ΔR_0 + R_C`, `Q = R_0 + R_C`, `X = D·R_M + R_L`,
/// `m = (1-D)²` and `R_2 = R_0 + ΔR_0`:
///
/// ```text
/// a = L·C³·P²·Q
/// b = L·C²·P² + 2L·C²·P·Q + C³·X·P²·Q + C³·m·P·R_2·Q·R_C
/// c = 2L·C·P + L·C·Q + C²·X·P(2R_0 + ΔR_0 + 2R_C) + C²·X·P·Q
///     + C²·m·P·R_2(R_0 + 2R_C) + C²·m·R_2·Q·R_C
/// d = L + C·X(3R_0 + 2ΔR_0 + 3R_C) + C·m(2R_0 + ΔR_0 + 3R_C)·R_2
/// f = X + m·R_2
/// g = L·C³·P·R_C²
/// h = L·C²·R_C² + 2L·C²·P·R_C + C³·X·P·R_C²
/// j = 2L·C·R_C + L·C·P + C²·X·R_C² + 2C²·X·P·R_C
/// k = L + C·X(R_2 + 3R_C)
/// l = X
/// ```
pub fn load_tf_raw(p: &ConverterParams, delta_r0: f64) -> Result<QuarticTF> {
    let p = check_post_load(p, delta_r0)?;
    let (l_, c_, rc, r0, dr) = (p.l, p.c, p.r_c, p.r_0, delta_r0);
    let x = p.d * p.r_m + p.r_l;
    let m = (1.0 - p.d) * (1.0 - p.d);
    let r2 = r0 + dr;
    let pp = r2 + rc;
    let q = r0 + rc;
    let (c2, c3) = (c_ * c_, c_ * c_ * c_);

    let a = l_ * c3 * pp * pp * q;
    let b = l_ * c2 * pp * pp + 2.0 * l_ * c2 * pp * q + c3 * x * pp * pp * q + c3 * m * pp * r2 * q * rc;
    let c = 2.0 * l_ * c_ * pp
        + l_ * c_ * q
        + c2 * x * pp * (2.0 * r0 + dr + 2.0 * rc)
        + c2 * x * pp * q
        + c2 * m * pp * r2 * (r0 + 2.0 * rc)
        + c2 * m * r2 * q * rc;
    let d = l_ + c_ * x * (3.0 * r0 + 2.0 * dr + 3.0 * rc) + c_ * m * (2.0 * r0 + dr + 3.0 * rc) * r2;
    let f = x + m * r2;

    let g = l_ * c3 * pp * rc * rc;
    let h = l_ * c2 * rc * rc + 2.0 * l_ * c2 * pp * rc + c3 * x * pp * rc * rc;
    let j = 2.0 * l_ * c_ * rc + l_ * c_ * pp + c2 * x * rc * rc + 2.0 * c2 * x * pp * rc;
    let k = l_ + c_ * x * (r2 + 3.0 * rc);

    let (gain_i2, _) = steady::steady_inductor_current(&p)?;
    Ok(QuarticTF {
        den: [a, b, c, d, f],
        num: [g, h, j, k, x],
        gain_i2,
        delta_r0,
    })
}

/// Empirical damping correction applied to `a, b, c, d`.
///
/// `κ = 0.5 + [(C - 42e-6)/5e-5 + (1e-3 - L)/6e-4 + (R_L - 1.4)/6 + (D - 0.5)/0.5
///      + (R_C - 1)/2 + (V_d - 0.4)/3 + (R_M - 0.8)/5]·0.6`
pub fn correction_factor(p: &ConverterParams) -> f64 {
    let bracket = (p.c - 0.000042) / 0.00005
        + (0.001 - p.l) / 0.0006
        + (p.r_l - 1.4) / 6.0
        + (p.d - 0.5) / 0.5
        + (p.r_c - 1.0) / 2.0
        + (p.v_d - 0.4) / 3.0
        + (p.r_m - 0.8) / 5.0;
    0.5 + bracket * 0.6
}

/// [`load_tf_raw`] with `a, b, c, d` scaled by [`correction_factor`].
pub fn load_tf_corrected(p: &ConverterParams, delta_r0: f64) -> Result<QuarticTF> {
    let mut tf = load_tf_raw(p, delta_r0)?;
    let kappa = correction_factor(p);
    if !(kappa > 0.0) {
        return Err(Error::CorrectionOutOfDomain(kappa));
    }
    for coeff in &mut tf.den[..4] {
        *coeff *= kappa;
    }
    Ok(tf)
}

/// Partial-fraction inverse of `I_2·ΔR_0·N(s)/(s·D(s))`.
///
/// Residue at root `x_i` is `I_2·ΔR_0·N(x_i)/(x_i·D'(x_i))`; the offset is
/// the residue at the origin, `I_2·ΔR_0·l/f`. Residues are computed for the
/// upper member of each conjugate pair and mirrored for the lower one.
pub fn invert_quartic_tf(tf: &QuarticTF) -> Result<ExpModeSum> {
    let roots = poly::real_poly_roots(&tf.den)?;
    let span = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    for (i, ri) in roots.iter().enumerate() {
        if roots[i + 1..].iter().any(|rj| (ri - rj).norm() <= 1e-9 * span) {
            return Err(Error::RepeatedRoots);
        }
    }
    let scale = tf.step_scale();
    let dden = poly::derivative(&tf.den);
    let residue = |x: Complex64| scale * poly::eval_real(&tf.num, x) / (x * poly::eval_real(&dden, x));

    let mut modes = Vec::with_capacity(roots.len());
    for &x in &roots {
        if x.im > 0.0 {
            let r = residue(x);
            modes.push((r, x));
            modes.push((r.conj(), x.conj()));
        } else if x.im == 0.0 {
            modes.push((Complex64::new(residue(x).re, 0.0), x));
        }
    }
    let mut flags = Vec::new();
    if roots.iter().any(|x| x.re >= 0.0) {
        flags.push(Flag::UnstableRoots);
    }
    Ok(ExpModeSum {
        offset: scale * tf.dc_gain(),
        modes,
        flags,
    })
}

/// Output voltage `t` seconds after the load steps from `R_0` to
/// `R_0 + ΔR_0`: the steady output at `R_0` plus the inverted corrected
/// transfer function. With a capacitor ESR the function is biproper, so the
/// value at `t = 0` already includes the instantaneous jump
/// `I_2·ΔR_0·g/a`.
pub fn load_response(p: &ConverterParams, delta_r0: f64, t: f64) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidTime(t));
    }
    let (v_o, modes) = load_parts(p, delta_r0)?;
    Ok(v_o + modes.evaluate(t))
}

fn load_parts(p: &ConverterParams, delta_r0: f64) -> Result<(f64, ExpModeSum)> {
    let tf = load_tf_corrected(p, delta_r0)?;
    let modes = invert_quartic_tf(&tf)?;
    Ok((steady::steady_output(p)?, modes))
}

/// Steady value and first extremum of the load-step response.
///
/// The search scans the analytic derivative of the mode sum over two
/// half-periods of the fastest oscillating mode (or the slowest time constant
/// when every root is real) and bisects on the first sign change.
pub fn load_metrics(p: &ConverterParams, delta_r0: f64) -> Result<ResponseMetrics> {
    let (v_o, modes) = load_parts(p, delta_r0)?;
    Ok(mode_sum_metrics(v_o, delta_r0, &modes))
}

fn mode_sum_metrics(v_o: f64, delta_r0: f64, modes: &ExpModeSum) -> ResponseMetrics {
    let v_steady = v_o + modes.offset;
    if delta_r0 == 0.0 || !modes.is_stable() {
        return ResponseMetrics::no_peak(v_steady);
    }
    let dir = delta_r0.signum();
    let excursion = if dir > 0.0 {
        Excursion::Overshoot
    } else {
        Excursion::Undershoot
    };
    let w = modes.fastest_oscillation();
    let half_period = if w > 0.0 {
        std::f64::consts::PI / w
    } else {
        std::f64::consts::PI / modes.slowest_decay()
    };
    let rate = modes.modes.iter().map(|&(_, x)| x.norm()).fold(0.0, f64::max);
    let tol = 1e-9 * rate * v_steady.abs().max(f64::MIN_POSITIVE);
    let slope = |t: f64| dir * modes.derivative(t);
    match first_extremum(slope, half_period, tol) {
        Some(t_p) => ResponseMetrics::new(v_steady, v_o + modes.evaluate(t_p), Some(t_p), excursion),
        None => ResponseMetrics {
            excursion,
            ..ResponseMetrics::no_peak(v_steady)
        },
    }
}

fn load_event_parts(p: &ConverterParams, event: &StepEvent) -> Result<(ConverterParams, f64)> {
    let event = event.validate()?;
    if event.kind != StepKind::LoadResistance {
        return Err(Error::UnsupportedModel(
            "the load transfer function needs a load-resistance step".into(),
        ));
    }
    Ok((event.params_before(p), event.delta()))
}

/// [`load_response`] driven by a load event, `t` measured from the event.
pub fn load_event_response(p: &ConverterParams, event: &StepEvent, t: f64) -> Result<f64> {
    let (before, delta) = load_event_parts(p, event)?;
    load_response(&before, delta, t)
}

/// [`load_metrics`] driven by a load event.
pub fn load_event_metrics(p: &ConverterParams, event: &StepEvent) -> Result<ResponseMetrics> {
    let (before, delta) = load_event_parts(p, event)?;
    load_metrics(&before, delta)
}
