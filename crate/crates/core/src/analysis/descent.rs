use serde::{Deserialize, Serialize};

use super::{bind_event, predict, Model};
use crate::circuit::{ConverterParams, Parameter, ResponseMetrics, StepEvent};
use crate::ebm::bisect;
use crate::error::{Error, Result};
use crate::steady;

const FD_STEP: f64 = 1e-4;
const INITIAL_STEP: f64 = 0.05;
const MAX_HALVINGS: usize = 40;

/// Side condition held along a mitigation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Constraint {
    None,
    /// The duty cycle is re-solved after each step to hold the steady output.
    ConstantSteadyOutput,
    /// `L` and `C` are rescaled together to hold `L·C`.
    ConstantOmega0,
    /// `R_L` is clamped at the budget.
    ParasiticLossBound {
        r_l_max: f64,
    },
}

impl Constraint {
    pub fn tag(&self) -> &'static str {
        match self {
            Constraint::None => "none",
            Constraint::ConstantSteadyOutput => "constant-steady-output",
            Constraint::ConstantOmega0 => "constant-omega0",
            Constraint::ParasiticLossBound { .. } => "parasitic-loss-bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathPoint {
    pub params: ConverterParams,
    pub v_max: f64,
    /// Closed-form steady output at the point.
    pub steady_output: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescentPath {
    pub constraint: Constraint,
    pub free: Vec<Parameter>,
    pub points: Vec<PathPoint>,
}

struct Problem<'a> {
    event: &'a StepEvent,
    model: Model,
    constraint: Constraint,
    target_steady: f64,
    lc: f64,
}

impl Problem<'_> {
    fn project(&self, q: &ConverterParams) -> Result<ConverterParams> {
        let mut q = *q;
        match self.constraint {
            Constraint::None => {}
            Constraint::ConstantSteadyOutput => q.d = solve_duty(&q, self.target_steady)?,
            Constraint::ConstantOmega0 => {
                let s = (self.lc / (q.l * q.c)).sqrt();
                q.l *= s;
                q.c *= s;
            }
            Constraint::ParasiticLossBound { r_l_max } => q.r_l = q.r_l.min(r_l_max),
        }
        q.checked()
    }

    fn objective(&self, q: &ConverterParams) -> Result<f64> {
        let event = bind_event(self.event, q);
        Ok(predict(q, &event, self.model)?.metrics.v_max)
    }

    fn point(&self, q: ConverterParams) -> Result<PathPoint> {
        Ok(PathPoint {
            params: q,
            v_max: self.objective(&q)?,
            steady_output: steady::steady_output(&q)?,
        })
    }
}

// duty cycle near q.d giving the target steady output, within 1e-6 V
fn solve_duty(q: &ConverterParams, target: f64) -> Result<f64> {
    let g = |d: f64| {
        steady::steady_output(&ConverterParams { d, ..*q })
            .map(|v| v - target)
            .unwrap_or(f64::NAN)
    };
    let g0 = g(q.d);
    if g0.abs() <= 1e-6 {
        return Ok(q.d);
    }
    let step = 0.005;
    for k in 1..=200 {
        for dir in [-1.0, 1.0] {
            let d1 = q.d + dir * (k - 1) as f64 * step;
            let d2 = q.d + dir * k as f64 * step;
            if !(d2 > 1e-4 && d2 < 0.98) {
                continue;
            }
            let (g1, g2) = (g(d1), g(d2));
            if g1.is_finite() && g2.is_finite() && g1.signum() != g2.signum() {
                let (lo, hi) = (d1.min(d2), d1.max(d2));
                // orient so the bisection sees a positive-to-negative crossing
                let sign = if g(lo) > 0.0 { 1.0 } else { -1.0 };
                let d = bisect(|d| sign * g(d), lo, hi, 1e-7);
                if g(d).abs() <= 1e-6 {
                    return Ok(d);
                }
                return Err(Error::ConstraintInfeasible(format!(
                    "duty bisection stalled at d = {d}"
                )));
            }
        }
    }
    Err(Error::ConstraintInfeasible(format!(
        "no duty cycle gives a steady output of {target} V"
    )))
}

/// Steepest descent of the peak output over the free parameters.
///
/// The gradient is taken by central differences in log-parameter space
/// (relative step `1e-4`), evaluated at constraint-projected points. Each
/// step moves the free parameters by up to 5% along the negative gradient
/// and is halved until the projected point lowers the peak. The path stops
/// when the gradient norm drops below `1e-6·v_max`, no step improves, or
/// after `max_steps` steps.
pub fn steepest_descent(
    p: &ConverterParams,
    event: &StepEvent,
    model: Model,
    free: &[Parameter],
    constraint: Constraint,
    max_steps: usize,
) -> Result<DescentPath> {
    let p = p.checked()?;
    if free.is_empty() || free.len() > 3 {
        return Err(Error::UnsupportedAxisPair(format!(
            "descent needs one to three free parameters, got {}",
            free.len()
        )));
    }
    for (k, a) in free.iter().enumerate() {
        if free[k + 1..].contains(a) {
            return Err(Error::UnsupportedAxisPair(format!("{a} listed twice")));
        }
        if !(p.get(*a) > 0.0) {
            return Err(Error::UnsupportedAxisPair(format!(
                "{a} must be positive to descend in log space"
            )));
        }
    }
    let problem = Problem {
        event,
        model,
        constraint,
        target_steady: steady::steady_output(&p)?,
        lc: p.l * p.c,
    };
    let start = problem.project(&p)?;
    let mut current = problem.point(start)?;
    let v0 = current.v_max;
    let mut points = vec![current];

    'outer: for _ in 0..max_steps {
        let grad: Vec<f64> = free
            .iter()
            .map(|&a| {
                let x = current.params.get(a);
                let at = |f: f64| {
                    problem
                        .project(&current.params.with(a, x * f))
                        .and_then(|q| problem.objective(&q))
                };
                Ok((at(FD_STEP.exp())? - at((-FD_STEP).exp())?) / (2.0 * FD_STEP))
            })
            .collect::<Result<_>>()?;
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < 1e-6 * current.v_max.abs() {
            break;
        }
        let largest = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let mut alpha = INITIAL_STEP;
        for _ in 0..MAX_HALVINGS {
            let mut q = current.params;
            for (&a, g) in free.iter().zip(&grad) {
                q.set(a, q.get(a) * (-alpha * g / largest).exp());
            }
            let trial = problem.project(&q).and_then(|q| problem.point(q));
            if let Ok(t) = trial {
                if t.v_max < current.v_max - 1e-9 * v0.abs() {
                    current = t;
                    points.push(t);
                    continue 'outer;
                }
            }
            alpha *= 0.5;
        }
        break;
    }
    Ok(DescentPath {
        constraint,
        free: free.to_vec(),
        points,
    })
}

/// Transfer-function predictions for a baseline and a modified circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub before: ResponseMetrics,
    pub after: ResponseMetrics,
    pub delta_v_max: f64,
    pub delta_v_steady: f64,
    /// Drop in overshoot, percentage points.
    pub overshoot_reduction_pct: f64,
}

pub fn scenario_predict(
    before: &ConverterParams,
    after: &ConverterParams,
    event: &StepEvent,
) -> Result<ScenarioReport> {
    let a = predict(before, event, Model::Tfm)?.metrics;
    let b = predict(after, event, Model::Tfm)?.metrics;
    Ok(ScenarioReport {
        before: a,
        after: b,
        delta_v_max: b.v_max - a.v_max,
        delta_v_steady: b.v_steady - a.v_steady,
        overshoot_reduction_pct: a.overshoot_pct - b.overshoot_pct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{load_method1, method1};

    fn strictly_decreasing(path: &DescentPath) -> bool {
        path.points.windows(2).all(|w| w[1].v_max < w[0].v_max)
    }

    #[test]
    fn unconstrained_descent_lowers_the_peak() {
        let p = ConverterParams {
            v_i: 8.0,
            d: 0.6,
            ..method1()
        };
        let path = steepest_descent(
            &p,
            &StepEvent::startup(8.0),
            Model::Tfm,
            &[Parameter::Vi, Parameter::D],
            Constraint::None,
            20,
        )
        .unwrap();
        assert!(path.points.len() > 2);
        assert!(strictly_decreasing(&path));
    }

    #[test]
    fn steady_output_is_held() {
        let p = method1();
        let path = steepest_descent(
            &p,
            &StepEvent::startup(p.v_i),
            Model::Tfm,
            &[Parameter::L, Parameter::C],
            Constraint::ConstantSteadyOutput,
            15,
        )
        .unwrap();
        assert!(path.points.len() > 1);
        assert!(strictly_decreasing(&path));
        let v0 = path.points[0].steady_output;
        assert!(path.points.iter().all(|pt| (pt.steady_output - v0).abs() < 1e-3));
    }

    #[test]
    fn steady_output_is_held_when_resistance_moves() {
        let p = method1();
        let path = steepest_descent(
            &p,
            &StepEvent::startup(p.v_i),
            Model::Ebm,
            &[Parameter::RL, Parameter::C],
            Constraint::ConstantSteadyOutput,
            10,
        )
        .unwrap();
        assert!(strictly_decreasing(&path));
        let v0 = path.points[0].steady_output;
        assert!(path.points.iter().all(|pt| (pt.steady_output - v0).abs() < 1e-3));
        assert!(path.points.iter().any(|pt| pt.params.d != p.d));
    }

    #[test]
    fn characteristic_frequency_is_held() {
        let p = method1();
        let path = steepest_descent(
            &p,
            &StepEvent::startup(p.v_i),
            Model::Tfm,
            &[Parameter::L, Parameter::C, Parameter::RL],
            Constraint::ConstantOmega0,
            15,
        )
        .unwrap();
        assert!(strictly_decreasing(&path));
        let w0 = 1.0 / (p.l * p.c).sqrt();
        for pt in &path.points {
            let w = 1.0 / (pt.params.l * pt.params.c).sqrt();
            assert!((w - w0).abs() <= 1e-9 * w0);
        }
    }

    #[test]
    fn loss_budget_caps_winding_resistance() {
        let p = method1();
        let c = Constraint::ParasiticLossBound { r_l_max: 2.0 };
        let path = steepest_descent(
            &p,
            &StepEvent::startup(p.v_i),
            Model::Tfm,
            &[Parameter::RL, Parameter::C],
            c,
            30,
        )
        .unwrap();
        assert!(strictly_decreasing(&path));
        assert!(path.points.iter().all(|pt| pt.params.r_l <= 2.0));
    }

    #[test]
    fn free_parameter_checks() {
        let p = method1();
        let ev = StepEvent::startup(p.v_i);
        assert!(steepest_descent(&p, &ev, Model::Tfm, &[], Constraint::None, 5).is_err());
        assert!(steepest_descent(&p, &ev, Model::Tfm, &[Parameter::L, Parameter::L], Constraint::None, 5).is_err());
        let q = ConverterParams { r_c: 0.0, ..p };
        assert!(steepest_descent(&q, &ev, Model::Tfm, &[Parameter::RC], Constraint::None, 5).is_err());
    }

    #[test]
    fn duty_solver_hits_target() {
        let p = method1();
        let target = steady::steady_output(&ConverterParams { d: 0.45, ..p }).unwrap();
        let d = solve_duty(&p, target).unwrap();
        assert!((d - 0.45).abs() < 1e-5, "{d}");
        assert!(solve_duty(&p, 1e3).is_err());
    }

    #[test]
    fn scenarios() {
        let base = load_method1();
        let ev = StepEvent::load(10.0, 150.0, 0.0);
        let same = scenario_predict(&base, &base, &ev).unwrap();
        assert_eq!(
            (same.delta_v_max, same.delta_v_steady, same.overshoot_reduction_pct),
            (0.0, 0.0, 0.0)
        );
        let bigger_c = ConverterParams { c: 100e-6, ..base };
        let r = scenario_predict(&base, &bigger_c, &ev).unwrap();
        assert!(r.delta_v_max < 0.0);
        let lossier = ConverterParams { r_l: 3.0, ..base };
        let r = scenario_predict(&base, &lossier, &ev).unwrap();
        assert!(r.delta_v_max < 0.0 && r.delta_v_steady < 0.0);
    }
}
