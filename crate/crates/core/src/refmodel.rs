//! Conventional lossless reference model.
//!
//! `G(s) = (1-D) / (LC·s² + (L/R_0)·s + (1-D)²)`, obtained from the buck
//! converter by analogy and carrying no parasitics. It has no transient
//! under a load change; the output simply jumps between the two steady
//! levels.

use crate::circuit::{ConverterParams, Excursion, ResponseMetrics, StepEvent, StepKind};
use crate::error::{Error, Flag, Result};
use crate::tfm_line::{self, SecondOrderTF};

pub fn fr_tf(p: &ConverterParams) -> Result<SecondOrderTF> {
    let p = p.checked()?;
    let one_minus_d = 1.0 - p.d;
    Ok(SecondOrderTF {
        a: p.l * p.c,
        b: p.l / p.r_0,
        c: one_minus_d * one_minus_d,
        d_num: 0.0,
        f_num: one_minus_d,
    })
}

/// Response to an input step of height `k` from rest.
pub fn fr_step_response(p: &ConverterParams, k: f64, t: f64) -> Result<f64> {
    tfm_line::line_step_response(&fr_tf(p)?, k, t)
}

/// Lossless steady output `V_i/(1-D)`.
pub fn fr_steady_output(p: &ConverterParams) -> Result<f64> {
    let tf = fr_tf(p)?;
    Ok(p.v_i * tf.dc_gain())
}

/// Output `t` seconds after an event.
///
/// Input steps follow the lossless step response from the old steady level.
/// Load steps are two steady segments joined at the event.
pub fn fr_event_response(p: &ConverterParams, event: &StepEvent, t: f64) -> Result<(f64, Vec<Flag>)> {
    let event = event.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidTime(t));
    }
    match event.kind {
        StepKind::InputVoltage => {
            let before = fr_steady_output(&event.params_before(p))?;
            let before = if event.is_startup() { 0.0 } else { before };
            let after = event.params_after(p);
            let v = before + fr_step_response(&after, event.delta(), t)?;
            Ok((v, fr_tf(&after)?.flags()))
        }
        StepKind::LoadResistance => {
            let (v, _) = stitched(p, &event)?;
            Ok((v, vec![Flag::NoTransient]))
        }
    }
}

// (level after the event, level before it)
fn stitched(p: &ConverterParams, event: &StepEvent) -> Result<(f64, f64)> {
    let before = fr_steady_output(&event.params_before(p))?;
    let after = fr_steady_output(&event.params_after(p).checked()?)?;
    Ok((after, before))
}

/// Steady value and first peak of the reference model after an event.
pub fn fr_metrics(p: &ConverterParams, event: &StepEvent) -> Result<(ResponseMetrics, Vec<Flag>)> {
    let event = event.validate()?;
    match event.kind {
        StepKind::InputVoltage => {
            let after = event.params_after(p);
            let before = if event.is_startup() {
                0.0
            } else {
                fr_steady_output(&event.params_before(p))?
            };
            let tf = fr_tf(&after)?;
            let k = event.delta();
            let v_steady = before + k * tf.dc_gain();
            if k == 0.0 || !tf.is_underdamped() {
                return Ok((ResponseMetrics::no_peak(v_steady), tf.flags()));
            }
            let t_p = tfm_line::line_peak_time(&tf)?;
            let v_max = before + tfm_line::line_peak_voltage(&tf, k)?;
            let excursion = if k > 0.0 {
                Excursion::Overshoot
            } else {
                Excursion::Undershoot
            };
            Ok((ResponseMetrics::new(v_steady, v_max, Some(t_p), excursion), Vec::new()))
        }
        StepKind::LoadResistance => {
            let (after, _) = stitched(p, &event)?;
            Ok((ResponseMetrics::no_peak(after), vec![Flag::NoTransient]))
        }
    }
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::fixtures::{load_method1, method1};

    #[test]
    fn reference_steady_value() {
        let v = fr_steady_output(&method1()).unwrap();
        assert!((v - 6.47).abs() < 0.005);
        let tf = fr_tf(&method1()).unwrap();
        assert!((tf.dc_gain() - 1.0 / 0.51).abs() < 1e-12);
    }

    #[test]
    fn step_response_end_points() {
        let p = method1();
        assert_eq!(fr_step_response(&p, 3.3, 0.0).unwrap(), 0.0);
        let late = fr_step_response(&p, 3.3, 1.0).unwrap();
        assert!((late - 3.3 / 0.51).abs() < 1e-9);
    }

    #[test]
    fn reference_peak_within_three_percent() {
        for c in [42e-6, 47e-6] {
            let p = ConverterParams { c, ..method1() };
            let (m, _) = fr_metrics(&p, &StepEvent::startup(3.3)).unwrap();
            assert!((m.v_max - 11.94).abs() / 11.94 < 0.03, "{c}: {}", m.v_max);
        }
    }

    #[test]
    fn lossless_limit_of_line_model() {
        let p = method1().without_parasitics();
        let fr = fr_tf(&p).unwrap();
        let tfm = tfm_line::line_tf_coefficients(&p).unwrap();
        for s in [
            Complex64::new(0.0, 100.0),
            Complex64::new(50.0, 4e3),
            Complex64::new(-10.0, 2e5),
        ] {
            let (a, b) = (fr.eval(s), tfm.eval(s));
            assert!((a - b).norm() <= 1e-12 * a.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn parasitics_only_reduce_overshoot() {
        for l in [0.8e-3, 1e-3, 1.2e-3] {
            for c in [38e-6, 42e-6, 47e-6] {
                for d in [0.4, 0.49, 0.55] {
                    let p = ConverterParams { l, c, d, ..method1() };
                    let ev = StepEvent::startup(p.v_i);
                    let (fr, _) = fr_metrics(&p, &ev).unwrap();
                    let tfm = tfm_line::line_metrics(&p, &ev).unwrap();
                    assert!(fr.overshoot_pct >= tfm.overshoot_pct);
                }
            }
        }
    }

    #[test]
    fn load_change_is_stitched() {
        let p = load_method1();
        let ev = StepEvent::load(10.0, 150.0, 0.0);
        let (m, flags) = fr_metrics(&p, &ev).unwrap();
        assert_eq!(flags, vec![Flag::NoTransient]);
        assert!((m.v_steady - 10.0).abs() < 1e-12);
        assert_eq!(m.v_max, m.v_steady);
        let (v, _) = fr_event_response(&p, &ev, 1e-3).unwrap();
        assert_eq!(v, m.v_steady);
    }

    #[test]
    fn live_input_step() {
        let p = method1();
        let ev = StepEvent::input(3.3, 5.0, 0.0);
        let (v0, _) = fr_event_response(&p, &ev, 0.0).unwrap();
        assert!((v0 - 3.3 / 0.51).abs() < 1e-12);
        let (m, _) = fr_metrics(&p, &ev).unwrap();
        assert!((m.v_steady - 5.0 / 0.51).abs() < 1e-12);
        assert!(m.v_max > m.v_steady);
    }
}
