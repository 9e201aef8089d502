//! Transfer-function model for input-voltage steps.
//!
//! `G(s) = (d·s + f) / (a·s² + b·s + c)` from input voltage to output voltage,
//! with every parasitic folded into the coefficients. The step response,
//! peak time and peak voltage all have closed forms.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::circuit::{ConverterParams, Excursion, ResponseMetrics, StepEvent, StepKind};
use crate::error::{Error, Flag, Result};
use crate::steady;

/// Second-order rational transfer function `(d_num·s + f_num)/(a·s² + b·s + c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderTF {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d_num: f64,
    pub f_num: f64,
}

/// Residue and pole parameters of an underdamped step response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedSinusoidParams {
    /// `f/2c`.
    pub a_res: f64,
    /// `(b·f - 2c·d) / (2c·sqrt(4ac - b²))`.
    pub b_res: f64,
    /// Decay rate `b/2a`, 1/s.
    pub decay: f64,
    /// Oscillation frequency `sqrt(4ac - b²)/2a`, rad/s.
    pub freq: f64,
    /// `atan2(A, B)`, rad.
    pub phi: f64,
}

impl SecondOrderTF {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        (s * self.d_num + self.f_num) / (s * s * self.a + s * self.b + self.c)
    }

    pub fn dc_gain(&self) -> f64 {
        self.f_num / self.c
    }

    /// `4ac - b²`; positive for complex-conjugate poles.
    pub fn discriminant(&self) -> f64 {
        4.0 * self.a * self.c - self.b * self.b
    }

    pub fn is_underdamped(&self) -> bool {
        self.discriminant() > 0.0
    }

    pub fn flags(&self) -> Vec<Flag> {
        if self.is_underdamped() {
            Vec::new()
        } else {
            vec![Flag::OverdampedTf]
        }
    }

    pub fn damped_params(&self) -> Result<DampedSinusoidParams> {
        let disc = self.discriminant();
        if !(disc > 0.0) {
            return Err(Error::OverdampedTf);
        }
        let q = disc.sqrt();
        let a_res = self.f_num / (2.0 * self.c);
        let b_res = (self.b * self.f_num - 2.0 * self.c * self.d_num) / (2.0 * self.c * q);
        Ok(DampedSinusoidParams {
            a_res,
            b_res,
            decay: self.b / (2.0 * self.a),
            freq: q / (2.0 * self.a),
            phi: a_res.atan2(b_res),
        })
    }
}

/// Coefficients of the input-to-output transfer function with parasitics:
///
/// ```text
/// a = (R_0 + R_C)·L·C
/// b = (1-D)²C·R_0·R_C + D·C·R_M(R_0 + R_C) + C·R_L(R_0 + R_C) + L
/// c = (1-D)²R_0 + R_L + D·R_M + (1-D)²R_C
/// d = (1-D)C·R_0·R_C
/// f = (1-D)R_0 - (V_d/V_i)(1-D)²R_0
/// ```
pub fn line_tf_coefficients(p: &ConverterParams) -> Result<SecondOrderTF> {
    let p = p.checked()?;
    if !(p.v_i > 0.0) {
        return Err(Error::ZeroInputVoltage);
    }
    let one_minus_d = 1.0 - p.d;
    let m = one_minus_d * one_minus_d;
    let rr = p.r_0 + p.r_c;
    Ok(SecondOrderTF {
        a: rr * p.l * p.c,
        b: m * p.c * p.r_0 * p.r_c + p.d * p.c * p.r_m * rr + p.c * p.r_l * rr + p.l,
        c: steady::loss_denominator(&p),
        d_num: one_minus_d * p.c * p.r_0 * p.r_c,
        f_num: one_minus_d * p.r_0 - p.v_d / p.v_i * m * p.r_0,
    })
}

/// Response to a step of height `k` applied at `t = 0` from rest.
///
/// Underdamped: `k[f/c - 2·sqrt(A² + B²)·e^{-Et}·sin(Ft + φ)]`. Real poles
/// fall back to the two-exponential partial-fraction inverse; callers can
/// detect that case through [`SecondOrderTF::flags`].
pub fn line_step_response(tf: &SecondOrderTF, k: f64, t: f64) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidTime(t));
    }
    if tf.is_underdamped() {
        let dp = tf.damped_params()?;
        let amp = 2.0 * dp.a_res.hypot(dp.b_res);
        Ok(k * (tf.dc_gain() - amp * (-dp.decay * t).exp() * (dp.freq * t + dp.phi).sin()))
    } else {
        Ok(k * real_pole_step(tf, t))
    }
}

/// Slope of [`line_step_response`] per unit step.
pub fn line_step_slope(tf: &SecondOrderTF, t: f64) -> Result<f64> {
    if tf.is_underdamped() {
        let dp = tf.damped_params()?;
        let amp = 2.0 * dp.a_res.hypot(dp.b_res);
        let arg = dp.freq * t + dp.phi;
        Ok(-amp * (-dp.decay * t).exp() * (dp.freq * arg.cos() - dp.decay * arg.sin()))
    } else {
        let (x1, x2, r1, r2) = real_poles(tf);
        Ok(r1 * x1 * (x1 * t).exp() + r2 * x2 * (x2 * t).exp())
    }
}

// poles x1, x2 (negative for a stable system) and step residues at them
fn real_poles(tf: &SecondOrderTF) -> (f64, f64, f64, f64) {
    let root = (-tf.discriminant()).max(0.0).sqrt();
    // numerically stable quadratic roots of a·s² + b·s + c
    let q = -0.5 * (tf.b + tf.b.signum() * root);
    let mut x1 = q / tf.a;
    let mut x2 = tf.c / q;
    if x1 == x2 {
        // repeated pole; nudge apart so the two-exponential form stays defined
        x1 *= 1.0 + 1e-7;
        x2 *= 1.0 - 1e-7;
    }
    let residue = |x: f64, other: f64| (tf.d_num * x + tf.f_num) / (tf.a * x * (x - other));
    (x1, x2, residue(x1, x2), residue(x2, x1))
}

fn real_pole_step(tf: &SecondOrderTF, t: f64) -> f64 {
    let (x1, x2, r1, r2) = real_poles(tf);
    tf.dc_gain() + r1 * (x1 * t).exp() + r2 * (x2 * t).exp()
}

/// Time from the step to the first maximum:
/// `[atan(√(4ac-b²)/b) - atan(f√(4ac-b²)/(bf - 2cd)) + π] / (√(4ac-b²)/2a)`.
///
/// Both arctangents are taken with `atan2` on their numerator/denominator
/// pair, which keeps `bf - 2cd < 0` in the right quadrant.
pub fn line_peak_time(tf: &SecondOrderTF) -> Result<f64> {
    let disc = tf.discriminant();
    if !(disc > 0.0) {
        return Err(Error::OverdampedTf);
    }
    let q = disc.sqrt();
    let theta1 = q.atan2(tf.b);
    let theta2 = (tf.f_num * q).atan2(tf.b * tf.f_num - 2.0 * tf.c * tf.d_num);
    Ok((theta1 - theta2 + PI) / (q / (2.0 * tf.a)))
}

/// Peak output for a step of height `v_i`, written out in closed form:
///
/// ```text
/// V_max = V_i[f/c - 2√((af² - bdf + cd²)/(4ac² - b²c))
///         · exp(b[θ2 - θ1 - π]/√(4ac - b²)) · sin(θ1 + π)]
/// ```
///
/// with `θ1 = atan2(√(4ac-b²), b)` and `θ2 = atan2(f√(4ac-b²), bf - 2cd)`.
pub fn line_peak_voltage(tf: &SecondOrderTF, v_i: f64) -> Result<f64> {
    let disc = tf.discriminant();
    if !(disc > 0.0) {
        return Err(Error::OverdampedTf);
    }
    let (a, b, c, d, f) = (tf.a, tf.b, tf.c, tf.d_num, tf.f_num);
    let q = disc.sqrt();
    let theta1 = q.atan2(b);
    let theta2 = (f * q).atan2(b * f - 2.0 * c * d);
    let amp = 2.0 * ((a * f * f - b * d * f + c * d * d) / (4.0 * a * c * c - b * b * c)).sqrt();
    let decay = (b * (theta2 - theta1 - PI) / q).exp();
    Ok(v_i * (f / c - amp * decay * (theta1 + PI).sin()))
}

/// Transfer function and step height for an input step `before → after`.
///
/// The response is the steady output at `before` plus the step response of
/// the returned function with height `after - before`. The numerator constant
/// is chosen so the final value lands on the steady output at `after`; for a
/// startup (`before = 0`) that is exactly the `(V_d/V_i)`-corrected
/// numerator, and for steps between two live voltages the diode-drop offset
/// cancels.
pub fn tf_for_input_step(p: &ConverterParams, before: f64, after: f64) -> Result<(SecondOrderTF, f64, f64)> {
    let p_after = ConverterParams { v_i: after, ..*p };
    let mut tf = line_tf_coefficients(&p_after)?;
    let v_before = if before == 0.0 {
        0.0
    } else {
        steady::steady_output(&ConverterParams { v_i: before, ..*p })?
    };
    let k = after - before;
    if before != 0.0 && k != 0.0 {
        let v_after = steady::steady_output(&p_after)?;
        tf.f_num = tf.c * (v_after - v_before) / k;
    }
    Ok((tf, k, v_before))
}

/// Output voltage `t` seconds after an input step.
pub fn line_event_response(p: &ConverterParams, event: &StepEvent, t: f64) -> Result<f64> {
    let (tf, k, base) = input_step_parts(p, event)?;
    Ok(base + line_step_response(&tf, k, t)?)
}

fn input_step_parts(p: &ConverterParams, event: &StepEvent) -> Result<(SecondOrderTF, f64, f64)> {
    let event = event.validate()?;
    if event.kind != StepKind::InputVoltage {
        return Err(Error::UnsupportedModel(
            "the line transfer function needs an input-voltage step".into(),
        ));
    }
    tf_for_input_step(p, event.value_before, event.value_after)
}

/// Steady value and first peak of the input-step response.
pub fn line_metrics(p: &ConverterParams, event: &StepEvent) -> Result<ResponseMetrics> {
    let (tf, k, base) = input_step_parts(p, event)?;
    let v_steady = base + k * tf.dc_gain();
    if k == 0.0 || !tf.is_underdamped() {
        return Ok(ResponseMetrics::no_peak(v_steady));
    }
    let t_p = line_peak_time(&tf)?;
    let v_max = base + line_peak_voltage(&tf, k)?;
    let excursion = if k > 0.0 {
        Excursion::Overshoot
    } else {
        Excursion::Undershoot
    };
    Ok(ResponseMetrics::new(v_steady, v_max, Some(t_p), excursion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{method1, method2};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn dc_gain_matches_steady_output() {
        let p = method1();
        let tf = line_tf_coefficients(&p).unwrap();
        let v = p.v_i * tf.dc_gain();
        assert!((v - 5.45).abs() < 0.005);
        assert!(rel(v, steady::steady_output(&p).unwrap()) < 1e-12);
    }

    #[test]
    fn zero_esr_removes_the_zero() {
        let tf = line_tf_coefficients(&ConverterParams { r_c: 0.0, ..method1() }).unwrap();
        assert_eq!(tf.d_num, 0.0);
    }

    #[test]
    fn zero_input_is_rejected() {
        let p = ConverterParams { v_i: 0.0, ..method1() };
        assert_eq!(line_tf_coefficients(&p), Err(Error::ZeroInputVoltage));
    }

    #[test]
    fn step_response_end_points() {
        let tf = line_tf_coefficients(&method1()).unwrap();
        assert!(line_step_response(&tf, 3.3, 0.0).unwrap().abs() < 1e-12);
        let dp = tf.damped_params().unwrap();
        let late = line_step_response(&tf, 3.3, 40.0 / dp.decay).unwrap();
        assert!(rel(late, 3.3 * tf.dc_gain()) < 1e-12);
        // initial slope of (d s + f)/(a s² + b s + c) is d/a per unit step
        assert!(rel(line_step_slope(&tf, 0.0).unwrap(), tf.d_num / tf.a) < 1e-9);
    }

    #[test]
    fn reference_peak_voltage() {
        let tf = line_tf_coefficients(&method1()).unwrap();
        let v = line_peak_voltage(&tf, 3.3).unwrap();
        assert!((v - 6.40).abs() < 0.005, "{v}");
        let t_p = line_peak_time(&tf).unwrap();
        assert!(rel(line_step_response(&tf, 3.3, t_p).unwrap(), v) < 1e-12);
        assert!(line_step_slope(&tf, t_p).unwrap().abs() < 1e-9 * tf.dc_gain() * tf.c / tf.b);
    }

    #[test]
    fn measured_set_peak_near_observed() {
        let tf = line_tf_coefficients(&method2()).unwrap();
        let v = line_peak_voltage(&tf, 3.3).unwrap();
        assert!(rel(v, 6.74) < 0.05, "{v}");
    }

    #[test]
    fn peak_time_without_zero_or_damping() {
        let tf = SecondOrderTF {
            a: 1e-6,
            b: 1e-9,
            c: 1.0,
            d_num: 0.0,
            f_num: 1.0,
        };
        let dp = tf.damped_params().unwrap();
        assert!(rel(line_peak_time(&tf).unwrap(), PI / dp.freq) < 1e-6);
        let v = line_peak_voltage(&tf, 1.0).unwrap();
        assert!(v > 1.99 && v < 2.0);
    }

    #[test]
    fn overdamped_falls_back_to_real_poles() {
        let p = ConverterParams {
            l: 1e-2,
            c: 1e-3,
            r_l: 20.0,
            ..method1()
        };
        let tf = line_tf_coefficients(&p).unwrap();
        assert!(!tf.is_underdamped());
        assert_eq!(tf.flags(), vec![Flag::OverdampedTf]);
        assert_eq!(line_peak_time(&tf), Err(Error::OverdampedTf));
        assert!(line_step_response(&tf, 3.3, 0.0).unwrap().abs() < 1e-12);
        let late = line_step_response(&tf, 3.3, 50.0).unwrap();
        assert!(rel(late, 3.3 * tf.dc_gain()) < 1e-9);
        let m = line_metrics(&p, &StepEvent::startup(3.3)).unwrap();
        assert!(m.t_p.is_none());
    }

    #[test]
    fn live_step_lands_on_new_steady_state() {
        let p = method1();
        let ev = StepEvent::input(3.3, 5.0, 0.0);
        let m = line_metrics(&p, &ev).unwrap();
        let target = steady::steady_output(&ConverterParams { v_i: 5.0, ..p }).unwrap();
        assert!(rel(m.v_steady, target) < 1e-12);
        let v0 = line_event_response(&p, &ev, 0.0).unwrap();
        assert!(rel(v0, steady::steady_output(&p).unwrap()) < 1e-12);
        assert!(m.v_max > m.v_steady);
    }

    #[test]
    fn startup_metrics_match_closed_forms() {
        let p = method1();
        let m = line_metrics(&p, &StepEvent::startup(3.3)).unwrap();
        let tf = line_tf_coefficients(&p).unwrap();
        assert_eq!(m.v_max, line_peak_voltage(&tf, 3.3).unwrap());
        assert_eq!(m.t_p, Some(line_peak_time(&tf).unwrap()));
    }

    #[test]
    fn load_events_are_not_accepted() {
        let e = line_metrics(&method1(), &StepEvent::load(10.0, 150.0, 0.0));
        assert!(matches!(e, Err(Error::UnsupportedModel(_))));
    }
}
