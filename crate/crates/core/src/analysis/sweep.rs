use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bind_event, predict, Model};
use crate::circuit::{ConverterParams, Parameter, ResponseMetrics, StepEvent};
use crate::error::{Error, Result};

const MAX_AXIS_POINTS: usize = 512;

/// One linearly spaced sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: Parameter,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(param: Parameter, lo: f64, hi: f64, n: usize) -> Self {
        Self { param, lo, hi, n }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|k| self.lo + k as f64 * step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    VMax,
    TP,
    VSteady,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::VMax => "v_max",
            Metric::TP => "t_p",
            Metric::VSteady => "v_steady",
        }
    }

    fn read(self, m: &ResponseMetrics) -> Option<f64> {
        match self {
            Metric::VMax => Some(m.v_max),
            Metric::TP => m.t_p,
            Metric::VSteady => Some(m.v_steady),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Axis,
    pub metric: Metric,
    pub model: Model,
    /// Template event; its stepped quantity follows the swept parameters
    /// as in [`bind_event`].
    pub event: StepEvent,
}

/// Metric values over a two-parameter grid, `values[i][j]` at
/// `(axis1[i], axis2[j])`. Cells where the model is undefined (for example
/// outside the load correction's domain, or with no peak for `t_p`) are
/// `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub axis1: Axis,
    pub axis2: Axis,
    pub metric: Metric,
    pub model: Model,
    pub values: Vec<Vec<Option<f64>>>,
}

fn check_axes(spec: &SweepSpec) -> Result<()> {
    let (a, b) = (spec.axis1, spec.axis2);
    let bad_axis =
        |x: &Axis| x.n == 0 || x.n > MAX_AXIS_POINTS || !(x.lo.is_finite() && x.hi.is_finite()) || x.lo > x.hi;
    if a.param == b.param {
        return Err(Error::UnsupportedAxisPair(format!("both axes sweep {}", a.param)));
    }
    for x in [&a, &b] {
        if bad_axis(x) {
            return Err(Error::UnsupportedAxisPair(format!(
                "axis {} needs 1..={MAX_AXIS_POINTS} points and finite lo <= hi, got {x:?}",
                x.param
            )));
        }
    }
    Ok(())
}

/// Evaluates the chosen metric of a closed-form model on every grid cell.
///
/// Cells are independent and computed in parallel; the result does not
/// depend on scheduling.
pub fn sweep(p: &ConverterParams, spec: &SweepSpec) -> Result<SweepGrid> {
    check_axes(spec)?;
    let xs = spec.axis1.values();
    let ys = spec.axis2.values();
    let cells: Vec<Option<f64>> = (0..xs.len() * ys.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / ys.len(), idx % ys.len());
            let q = p.with(spec.axis1.param, xs[i]).with(spec.axis2.param, ys[j]);
            let event = bind_event(&spec.event, &q);
            predict(&q, &event, spec.model)
                .ok()
                .and_then(|pred| spec.metric.read(&pred.metrics))
                .filter(|v| v.is_finite())
        })
        .collect();
    let values = cells.chunks(ys.len()).map(|row| row.to_vec()).collect();
    Ok(SweepGrid {
        axis1: spec.axis1,
        axis2: spec.axis2,
        metric: spec.metric,
        model: spec.model,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::method1;

    fn spec(a: Axis, b: Axis) -> SweepSpec {
        SweepSpec {
            axis1: a,
            axis2: b,
            metric: Metric::VMax,
            model: Model::Tfm,
            event: StepEvent::startup(3.3),
        }
    }

    #[test]
    fn grid_shape_and_determinism() {
        let s = spec(
            Axis::new(Parameter::Vi, 2.0, 6.0, 5),
            Axis::new(Parameter::D, 0.3, 0.6, 7),
        );
        let a = sweep(&method1(), &s).unwrap();
        let b = sweep(&method1(), &s).unwrap();
        assert_eq!(a.values.len(), 5);
        assert!(a.values.iter().all(|r| r.len() == 7));
        assert_eq!(a, b);
        assert!(a.values.iter().flatten().all(|v| v.is_some()));
    }

    #[test]
    fn axis_values_hit_both_ends() {
        let v = Axis::new(Parameter::L, 1e-4, 2e-3, 16).values();
        assert_eq!(v[0], 1e-4);
        assert!((v[15] - 2e-3).abs() < 1e-18);
    }

    #[test]
    fn bad_axes_are_refused() {
        let p = method1();
        let same = spec(
            Axis::new(Parameter::L, 1e-4, 1e-3, 4),
            Axis::new(Parameter::L, 1e-4, 1e-3, 4),
        );
        assert!(matches!(sweep(&p, &same), Err(Error::UnsupportedAxisPair(_))));
        let big = spec(
            Axis::new(Parameter::L, 1e-4, 1e-3, 513),
            Axis::new(Parameter::C, 1e-5, 1e-4, 4),
        );
        assert!(matches!(sweep(&p, &big), Err(Error::UnsupportedAxisPair(_))));
        let reversed = spec(
            Axis::new(Parameter::L, 1e-3, 1e-4, 4),
            Axis::new(Parameter::C, 1e-5, 1e-4, 4),
        );
        assert!(matches!(sweep(&p, &reversed), Err(Error::UnsupportedAxisPair(_))));
    }

    #[test]
    fn invalid_cells_are_marked() {
        // duty values at and beyond 1 are rejected by validation
        let s = spec(
            Axis::new(Parameter::Vi, 2.0, 4.0, 3),
            Axis::new(Parameter::D, 0.5, 1.5, 3),
        );
        let g = sweep(&method1(), &s).unwrap();
        assert!(g
            .values
            .iter()
            .all(|r| r[0].is_some() && r[1].is_none() && r[2].is_none()));
    }
}
