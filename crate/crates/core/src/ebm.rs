//! Energy-balance model: a second-order ODE for the averaged output voltage
//! and its closed-form time-domain solution.
//!
//! The ODE is
//!
//! ```text
//! L·C·v'' + [L/R_0 + C(R_L + D·R_M)]·v' + [(1-D)² + ((1-D)²R_C + R_L + D·R_M)/R_0]·v
//!     = (1-D)V_i - (1-D)²V_d
//! ```
//!
//! The `R_C` term in the restoring coefficient is a steady-state patch; the
//! `i_C²R_C` loss that would otherwise enter the damping is neglected.

use crate::circuit::{ConverterParams, Excursion, ResponseMetrics, StepEvent, StepKind};
use crate::error::{Error, Flag, Result};
use crate::steady;

/// `m2·v'' + m1·v' + m0·v = forcing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeCoefficients {
    /// s².
    pub m2: f64,
    /// s.
    pub m1: f64,
    pub m0: f64,
    /// V.
    pub forcing: f64,
}

/// Damped-oscillator parameters plus initial conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderForm {
    pub xi: f64,
    /// rad/s.
    pub omega0: f64,
    /// `omega0·sqrt(1 - xi²)` when underdamped, 0 otherwise.
    pub omega_d: f64,
    pub v_inf: f64,
    pub v0: f64,
    /// V/s.
    pub dv0: f64,
}

pub fn ode_coefficients(p: &ConverterParams) -> Result<OdeCoefficients> {
    let p = p.checked()?;
    let m = (1.0 - p.d).powi(2);
    let series = p.r_l + p.d * p.r_m;
    Ok(OdeCoefficients {
        m2: p.l * p.c,
        m1: p.l / p.r_0 + p.c * series,
        m0: m + (m * p.r_c + series) / p.r_0,
        forcing: (1.0 - p.d) * p.v_i - m * p.v_d,
    })
}

pub fn to_standard_form(coeffs: &OdeCoefficients, v0: f64, dv0: f64) -> SecondOrderForm {
    let omega0 = (coeffs.m0 / coeffs.m2).sqrt();
    let xi = coeffs.m1 / (2.0 * coeffs.m2 * omega0);
    let omega_d = if xi < 1.0 { omega0 * (1.0 - xi * xi).sqrt() } else { 0.0 };
    SecondOrderForm {
        xi,
        omega0,
        omega_d,
        v_inf: coeffs.forcing / coeffs.m0,
        v0,
        dv0,
    }
}

// |xi - 1| below this is treated as critical damping
const CRITICAL_BAND: f64 = 1e-9;

impl SecondOrderForm {
    pub fn is_overdamped(&self) -> bool {
        self.xi >= 1.0
    }

    pub fn flags(&self) -> Vec<Flag> {
        if self.is_overdamped() {
            vec![Flag::OverdampedSystem]
        } else {
            Vec::new()
        }
    }

    /// Decay rate `xi·omega0`, 1/s.
    pub fn sigma(&self) -> f64 {
        self.xi * self.omega0
    }

    /// Value and slope of the deviation `v - v_inf` at time `t`.
    fn deviation(&self, t: f64) -> (f64, f64) {
        let x0 = self.v0 - self.v_inf;
        let s0 = self.dv0;
        let w0 = self.omega0;
        let sigma = self.sigma();
        if (self.xi - 1.0).abs() <= CRITICAL_BAND {
            let e = (-w0 * t).exp();
            let k = s0 + w0 * x0;
            let x = e * (x0 + k * t);
            let dx = e * (k - w0 * (x0 + k * t));
            (x, dx)
        } else if self.xi < 1.0 {
            let wd = self.omega_d;
            let (sn, cs) = (wd * t).sin_cos();
            let e = (-sigma * t).exp();
            let x = x0 * e * (cs + self.xi / (1.0 - self.xi * self.xi).sqrt() * sn) + e / wd * s0 * sn;
            let dx = e * (s0 * cs - (sigma * s0 + w0 * w0 * x0) / wd * sn);
            (x, dx)
        } else {
            let root = (self.xi * self.xi - 1.0).sqrt();
            // slow root written without the xi - root cancellation
            let r1 = -w0 / (self.xi + root);
            let r2 = -w0 * (self.xi + root);
            let a = (s0 - r2 * x0) / (r1 - r2);
            let b = x0 - a;
            let (e1, e2) = ((r1 * t).exp(), (r2 * t).exp());
            (a * e1 + b * e2, a * r1 * e1 + b * r2 * e2)
        }
    }

    /// Output slope at `t`, V/s.
    pub fn slope(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.deviation(t).1)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTime(t))
    }
}

/// Output voltage of the damped second-order solution at time `t`.
///
/// Underdamped:
/// `v = V∞ + (v0 - V∞)e^{-ξω0t}[cos ωd t + ξ/√(1-ξ²)·sin ωd t] + (e^{-ξω0t}/ωd)·v'(0)·sin ωd t`,
/// which satisfies `v(0) = v0` and `v'(0) = dv0`. Critically and overdamped
/// forms use the real-exponential solution of the same ODE.
pub fn ebm_response(form: &SecondOrderForm, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(form.v_inf + form.deviation(t).0)
}

/// Initial output slope right after a load step from `r1` to `r2`:
/// `(2·v0/C)(1/r1 - 1/r2)`.
pub fn initial_slope_for_load_step(v0: f64, c: f64, r1: f64, r2: f64) -> Result<f64> {
    if !(c > 0.0) || !(r1 > 0.0) || !(r2 > 0.0) {
        return Err(Error::InvalidEvent(format!(
            "load-step slope needs positive c, r1, r2 (got {c}, {r1}, {r2})"
        )));
    }
    Ok(2.0 * v0 / c * (1.0 / r1 - 1.0 / r2))
}

/// Second-order form for a disturbance.
///
/// Input steps start from the steady output at the old voltage (rest for a
/// startup) with zero slope. Load steps start from the steady output at the
/// old load, take the initial slope from the load-step formula, and use ODE
/// coefficients rebuilt at the new load.
pub fn form_for_event(p: &ConverterParams, event: &StepEvent) -> Result<SecondOrderForm> {
    let event = event.validate()?;
    let before = event.params_before(p);
    let after = event.params_after(p).checked()?;
    let coeffs = ode_coefficients(&after)?;
    match event.kind {
        StepKind::InputVoltage => {
            let v0 = if event.value_before == 0.0 {
                0.0
            } else {
                steady::steady_output(&before)?
            };
            Ok(to_standard_form(&coeffs, v0, 0.0))
        }
        StepKind::LoadResistance => {
            let v0 = steady::steady_output(&before)?;
            let dv0 = initial_slope_for_load_step(v0, p.c, event.value_before, event.value_after)?;
            Ok(to_standard_form(&coeffs, v0, dv0))
        }
    }
}

/// Steady value and first extremum of the closed-form response.
///
/// The extremum is located by scanning the analytic slope for its first sign
/// change against the direction of travel and bisecting until
/// `|v'| < 1e-9·ω0·|v∞|`. Overdamped forms and forms already at rest report
/// no peak.
pub fn ebm_metrics(form: &SecondOrderForm) -> ResponseMetrics {
    if form.is_overdamped() {
        return ResponseMetrics::no_peak(form.v_inf);
    }
    let x0 = form.v0 - form.v_inf;
    let dir = if x0 != 0.0 {
        -x0.signum()
    } else if form.dv0 != 0.0 {
        form.dv0.signum()
    } else {
        return ResponseMetrics::no_peak(form.v_inf);
    };
    let excursion = if dir > 0.0 {
        Excursion::Overshoot
    } else {
        Excursion::Undershoot
    };
    let half_period = std::f64::consts::PI / form.omega_d;
    let tol = 1e-9 * form.omega0 * form.v_inf.abs().max(f64::MIN_POSITIVE);
    let slope = |t: f64| dir * form.deviation(t).1;
    match first_extremum(slope, half_period, tol) {
        Some(t_p) => {
            let v = form.v_inf + form.deviation(t_p).0;
            ResponseMetrics::new(form.v_inf, v, Some(t_p), excursion)
        }
        None => ResponseMetrics::no_peak(form.v_inf),
    }
}

/// First `t > 0` where `slope` crosses from positive to non-positive.
///
/// The scan covers two `half_period` spans in 128 steps each, which always
/// contains the first zero of a damped sinusoid's derivative.
pub(crate) fn first_extremum(slope: impl Fn(f64) -> f64, half_period: f64, tol: f64) -> Option<f64> {
    let steps = 256;
    let h = 2.0 * half_period / steps as f64;
    // start just after zero so that a vanishing initial slope is skipped
    let mut t_prev = 1e-6 * h;
    let mut s_prev = slope(t_prev);
    for k in 1..=steps {
        let t = k as f64 * h;
        let s = slope(t);
        if s_prev > 0.0 && s <= 0.0 {
            return Some(bisect(&slope, t_prev, t, tol));
        }
        t_prev = t;
        s_prev = s;
    }
    None
}

pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s = f(mid);
        if s.abs() < tol || hi - lo <= f64::EPSILON * hi {
            return mid;
        }
        if s > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Inductor current after the switch has conducted from `t0` to `t1`
/// starting at `i_l_t0`: `i + D(t1 - t0)(V_i - i·R_L - i·R_M)/L`.
pub fn inductor_peak_current(p: &ConverterParams, i_l_t0: f64, t0: f64, t1: f64) -> Result<f64> {
    let p = p.checked()?;
    if !(t1 > t0) {
        return Err(Error::InvalidTime(t1 - t0));
    }
    Ok(i_l_t0 + p.d * (t1 - t0) * (p.v_i - i_l_t0 * p.r_l - i_l_t0 * p.r_m) / p.l)
}

/// Magnetic energy released between the two current levels of
/// [`inductor_peak_current`], J.
pub fn inductor_energy_release(p: &ConverterParams, i_l_t0: f64, t0: f64, t1: f64) -> Result<f64> {
    let i_peak = inductor_peak_current(p, i_l_t0, t0, t1)?;
    Ok(0.5 * p.l * (i_peak * i_peak - i_l_t0 * i_l_t0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{load_method1, method1};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn coefficients_for_line_reference() {
        let k = ode_coefficients(&method1()).unwrap();
        assert!(rel(k.m2, 4.2e-8) < 1e-12);
        // 1e-3/92 + 42e-6·(1.5 + 0.49·0.9)
        assert!(rel(k.m1, 1e-3 / 92.0 + 42e-6 * 1.941) < 1e-12);
        assert!((k.m1 - 9.239e-5).abs() < 5e-9);
        assert!((k.m0 - 0.28487).abs() < 5e-6);
        assert!((k.forcing - 1.553).abs() < 5e-4);
    }

    #[test]
    fn lossless_coefficients() {
        let p = method1().without_parasitics();
        let k = ode_coefficients(&p).unwrap();
        assert!(rel(k.m0, 0.51 * 0.51) < 1e-15);
        assert!(rel(k.forcing, 0.51 * 3.3) < 1e-15);
    }

    #[test]
    fn forcing_over_m0_is_steady_output() {
        for p in [
            method1(),
            load_method1(),
            ConverterParams {
                r_0: 150.0,
                ..load_method1()
            },
        ] {
            let k = ode_coefficients(&p).unwrap();
            let v = steady::steady_output(&p).unwrap();
            assert!(rel(k.forcing / k.m0, v) < 1e-12);
        }
    }

    #[test]
    fn standard_form_for_line_reference() {
        let f = to_standard_form(&ode_coefficients(&method1()).unwrap(), 0.0, 0.0);
        assert!((f.omega0 - 2604.0).abs() < 1.0, "{}", f.omega0);
        assert!((f.xi - 0.4224).abs() < 5e-4, "{}", f.xi);
        assert!((f.v_inf - 5.451).abs() < 5e-4);
        assert!(rel(f.omega_d, f.omega0 * (1.0 - f.xi * f.xi).sqrt()) < 1e-15);
    }

    #[test]
    fn undamped_limit() {
        let k = OdeCoefficients {
            m2: 1e-6,
            m1: 0.0,
            m0: 1.0,
            forcing: 2.0,
        };
        let f = to_standard_form(&k, 0.0, 0.0);
        assert_eq!(f.xi, 0.0);
        assert_eq!(f.omega_d, f.omega0);
        // undamped startup oscillates between 0 and twice the forced value
        let t_half = std::f64::consts::PI / f.omega0;
        assert!((ebm_response(&f, t_half).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn v_inf_depends_only_on_forcing_ratio() {
        let k = ode_coefficients(&method1()).unwrap();
        let scaled = OdeCoefficients {
            m1: 2.0 * k.m1,
            m2: 4.0 * k.m2,
            ..k
        };
        let (a, b) = (to_standard_form(&k, 0.0, 0.0), to_standard_form(&scaled, 0.0, 0.0));
        assert_eq!(a.v_inf, b.v_inf);
    }

    #[test]
    fn response_starts_at_initial_value() {
        let k = ode_coefficients(&method1()).unwrap();
        for (v0, dv0) in [(0.0, 0.0), (3.0, 100.0), (7.0, -2e4)] {
            let f = to_standard_form(&k, v0, dv0);
            assert_eq!(ebm_response(&f, 0.0).unwrap(), v0);
            assert!((f.slope(0.0).unwrap() - dv0).abs() <= 1e-9 * dv0.abs().max(1.0));
        }
    }

    #[test]
    fn response_settles_to_v_inf() {
        let f = to_standard_form(&ode_coefficients(&method1()).unwrap(), 0.0, 0.0);
        let t = 10.0 / f.sigma();
        assert!(rel(ebm_response(&f, t).unwrap(), f.v_inf) < 1e-4);
    }

    #[test]
    fn bad_times_are_rejected() {
        let f = to_standard_form(&ode_coefficients(&method1()).unwrap(), 0.0, 0.0);
        assert!(matches!(ebm_response(&f, f64::NAN), Err(Error::InvalidTime(_))));
        assert!(matches!(ebm_response(&f, -1e-3), Err(Error::InvalidTime(_))));
    }

    #[test]
    fn startup_peak_matches_overshoot_formula() {
        let f = to_standard_form(&ode_coefficients(&method1()).unwrap(), 0.0, 0.0);
        let m = ebm_metrics(&f);
        let expected = f.v_inf * (1.0 + (-f.xi * std::f64::consts::PI / (1.0 - f.xi * f.xi).sqrt()).exp());
        assert!(rel(m.v_max, expected) < 1e-9, "{} vs {expected}", m.v_max);
        assert!((m.v_max - 6.71).abs() < 0.005);
        assert!((m.v_steady - 5.45).abs() < 0.005);
        assert!(rel(m.t_p.unwrap(), std::f64::consts::PI / f.omega_d) < 1e-9);
    }

    #[test]
    fn load_step_form_and_steady() {
        let p = load_method1();
        let f = form_for_event(&p, &StepEvent::load(10.0, 150.0, 0.0)).unwrap();
        assert!((f.v0 - 5.2747).abs() < 1e-4);
        assert!(rel(f.dv0, 2.0 * f.v0 / 43e-6 * (0.1 - 1.0 / 150.0)) < 1e-12);
        let m = ebm_metrics(&f);
        assert!((m.v_steady - 9.10).abs() < 0.005);
        assert_eq!(m.excursion, Excursion::Overshoot);
        assert!(m.v_max > m.v_steady);
    }

    #[test]
    fn load_step_slope_examples() {
        let s = initial_slope_for_load_step(5.275, 43e-6, 10.0, 150.0).unwrap();
        assert!((s - 2.290e4).abs() < 5.0, "{s}");
        assert_eq!(initial_slope_for_load_step(5.0, 43e-6, 10.0, 10.0).unwrap(), 0.0);
        assert!(initial_slope_for_load_step(5.0, 43e-6, 150.0, 10.0).unwrap() < 0.0);
        assert!(initial_slope_for_load_step(5.0, 0.0, 150.0, 10.0).is_err());
    }

    #[test]
    fn overdamped_has_no_peak() {
        let p = ConverterParams {
            l: 1e-2,
            c: 1e-3,
            r_l: 20.0,
            ..method1()
        };
        let f = to_standard_form(&ode_coefficients(&p).unwrap(), 0.0, 0.0);
        assert!(f.xi >= 1.0);
        assert_eq!(f.flags(), vec![Flag::OverdampedSystem]);
        let m = ebm_metrics(&f);
        assert_eq!(m.v_max, f.v_inf);
        assert!(m.t_p.is_none());
        // still a solution of the ODE with the right end points
        assert_eq!(ebm_response(&f, 0.0).unwrap(), 0.0);
        let slow = f.omega0 / (f.xi + (f.xi * f.xi - 1.0).sqrt());
        assert!(rel(ebm_response(&f, 50.0 / slow).unwrap(), f.v_inf) < 1e-9);
    }

    #[test]
    fn critical_damping_is_continuous() {
        let base = OdeCoefficients {
            m2: 1e-6,
            m1: 2e-3,
            m0: 1.0,
            forcing: 1.0,
        };
        let f = to_standard_form(&base, 0.2, 50.0);
        assert!((f.xi - 1.0).abs() < 1e-12);
        for dm in [1.0 - 1e-7, 1.0 + 1e-7] {
            let g = to_standard_form(
                &OdeCoefficients {
                    m1: base.m1 * dm,
                    ..base
                },
                0.2,
                50.0,
            );
            for t in [1e-4, 1e-3, 5e-3] {
                let (a, b) = (ebm_response(&f, t).unwrap(), ebm_response(&g, t).unwrap());
                assert!((a - b).abs() < 1e-5, "t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn load_decrease_reports_undershoot() {
        let p = ConverterParams {
            r_0: 150.0,
            ..load_method1()
        };
        let f = form_for_event(&p, &StepEvent::load(150.0, 10.0, 0.0)).unwrap();
        assert!(f.dv0 < 0.0);
        let m = ebm_metrics(&f);
        assert_eq!(m.excursion, Excursion::Undershoot);
        assert!(m.v_max < m.v_steady);
    }

    #[test]
    fn positive_initial_slope_raises_the_peak() {
        let k = ode_coefficients(&ConverterParams {
            r_0: 150.0,
            ..load_method1()
        })
        .unwrap();
        let with = ebm_metrics(&to_standard_form(&k, 5.27, 2.29e4));
        let without = ebm_metrics(&to_standard_form(&k, 5.27, 0.0));
        assert!(with.v_max >= without.v_max);
    }

    #[test]
    fn switch_on_current_ramp() {
        let p = method1();
        let i = inductor_peak_current(&p, 0.0, 0.0, 1e-4).unwrap();
        assert!(rel(i, 0.49 * 1e-4 * 3.3 / 1e-3) < 1e-15);
        let p0 = ConverterParams { d: 1e-300, ..p };
        let i = inductor_peak_current(&p0, 0.2, 0.0, 1e-4).unwrap();
        assert!((i - 0.2).abs() < 1e-12);
        assert!(inductor_peak_current(&p, 0.0, 1.0, 1.0).is_err());
        let e = inductor_energy_release(&p, 0.0, 0.0, 1e-4).unwrap();
        assert!(rel(e, 0.5 * p.l * (0.49 * 1e-4 * 3.3 / 1e-3f64).powi(2)) < 1e-12);
    }
}
