//! Numerical reference solutions: a fixed-step integrator for the
//! state-space averaged model, a cycle-by-cycle switched simulator and an
//! energy audit over the switched trace.

use serde::Serialize;

use crate::circuit::{ConverterParams, StepEvent, StepKind, Waveform};
use crate::error::{Error, Flag, Result};

/// Settings for [`simulate_averaged`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedConfig {
    pub dt: f64,
    pub t_end: f64,
    /// With this off, `R_L`, `R_C`, `R_M` and `V_d` are all set to zero.
    pub include_parasitics: bool,
}

impl AveragedConfig {
    /// Largest allowed step for `p`, with a margin of `1/4` under it.
    pub fn for_params(p: &ConverterParams, t_end: f64, include_parasitics: bool) -> Self {
        Self {
            dt: averaged_step_limit(p) / 4.0,
            t_end,
            include_parasitics,
        }
    }
}

/// `min(√(LC)/100, 1/(20·f_sw))`.
pub fn averaged_step_limit(p: &ConverterParams) -> f64 {
    ((p.l * p.c).sqrt() / 100.0).min(1.0 / (20.0 * p.f_sw))
}

// inductor current and capacitor (internal) voltage
#[derive(Debug, Clone, Copy, PartialEq)]
struct State {
    i_l: f64,
    v_c: f64,
}

impl State {
    fn axpy(self, h: f64, k: State) -> State {
        State {
            i_l: self.i_l + h * k.i_l,
            v_c: self.v_c + h * k.v_c,
        }
    }

    fn is_finite(&self) -> bool {
        self.i_l.is_finite() && self.v_c.is_finite()
    }
}

fn rk4_step(f: impl Fn(State) -> State, x: State, h: f64) -> State {
    let k1 = f(x);
    let k2 = f(x.axpy(0.5 * h, k1));
    let k3 = f(x.axpy(0.5 * h, k2));
    let k4 = f(x.axpy(h, k3));
    State {
        i_l: x.i_l + h / 6.0 * (k1.i_l + 2.0 * k2.i_l + 2.0 * k3.i_l + k4.i_l),
        v_c: x.v_c + h / 6.0 * (k1.v_c + 2.0 * k2.v_c + 2.0 * k3.v_c + k4.v_c),
    }
}

/// Parameters in force at the start plus events snapped to step indices.
struct Schedule {
    initial: ConverterParams,
    changes: Vec<(usize, StepKind, f64)>,
}

impl Schedule {
    fn new(p: &ConverterParams, events: &[StepEvent], h: f64) -> Result<Self> {
        let mut sorted: Vec<StepEvent> = events.iter().map(|e| e.validate()).collect::<Result<_>>()?;
        sorted.sort_by(|a, b| a.t_event.total_cmp(&b.t_event));
        let mut initial = *p;
        for kind in [StepKind::InputVoltage, StepKind::LoadResistance] {
            if let Some(first) = sorted.iter().find(|e| e.kind == kind) {
                initial = first.params_before(&initial);
            }
        }
        let changes = sorted
            .iter()
            .map(|e| ((e.t_event / h).round() as usize, e.kind, e.value_after))
            .collect();
        Ok(Self { initial, changes })
    }

    // applies every change scheduled at step index k
    fn apply(&self, k: usize, p: &mut ConverterParams) {
        for &(idx, kind, value) in &self.changes {
            if idx == k {
                match kind {
                    StepKind::InputVoltage => p.v_i = value,
                    StepKind::LoadResistance => p.r_0 = value,
                }
            }
        }
    }
}

// Averaged dynamics, affine in the state: x' = A x + b.
//
// L·i' = V_i - i(R_L + D·R_M) - (1-D)(v_off + V_d), v_off = (v_c + R_C·i)R_0/(R_0 + R_C)
// C·v_c' = D·(-v_c/(R_0 + R_C)) + (1-D)(i·R_0 - v_c)/(R_0 + R_C)
fn averaged_rhs(p: &ConverterParams, x: State) -> State {
    let q = p.r_0 + p.r_c;
    let v_off = (x.v_c + p.r_c * x.i_l) * p.r_0 / q;
    let di = (p.v_i - x.i_l * (p.r_l + p.d * p.r_m) - (1.0 - p.d) * (v_off + p.v_d)) / p.l;
    let dv = (-p.d * x.v_c / q + (1.0 - p.d) * (x.i_l * p.r_0 - x.v_c) / q) / p.c;
    State { i_l: di, v_c: dv }
}

// duty-weighted output node voltage
fn averaged_output(p: &ConverterParams, x: State) -> f64 {
    let q = p.r_0 + p.r_c;
    p.d * x.v_c * p.r_0 / q + (1.0 - p.d) * (x.v_c + p.r_c * x.i_l) * p.r_0 / q
}

// Rest point of the averaged dynamics (zero state when the source cannot
// forward-bias the diode).
fn averaged_equilibrium(p: &ConverterParams) -> State {
    let origin = averaged_rhs(p, State { i_l: 0.0, v_c: 0.0 });
    let col_i = averaged_rhs(p, State { i_l: 1.0, v_c: 0.0 });
    let col_v = averaged_rhs(p, State { i_l: 0.0, v_c: 1.0 });
    let (a11, a21) = (col_i.i_l - origin.i_l, col_i.v_c - origin.v_c);
    let (a12, a22) = (col_v.i_l - origin.i_l, col_v.v_c - origin.v_c);
    let det = a11 * a22 - a12 * a21;
    let i_l = (-origin.i_l * a22 + origin.v_c * a12) / det;
    let v_c = (-a11 * origin.v_c + a21 * origin.i_l) / det;
    if i_l > 0.0 && i_l.is_finite() && v_c.is_finite() {
        State { i_l, v_c }
    } else {
        State { i_l: 0.0, v_c: 0.0 }
    }
}

/// Integrates the averaged two-state model with classical RK4.
///
/// Starts at the rest point of the parameters in force before the first
/// event of each kind; a startup event therefore starts from zero. Events
/// are snapped to the nearest step.
pub fn simulate_averaged(p: &ConverterParams, events: &[StepEvent], config: &AveragedConfig) -> Result<Waveform> {
    let p = p.checked()?;
    let p = if config.include_parasitics {
        p
    } else {
        p.without_parasitics()
    };
    let limit = averaged_step_limit(&p);
    if !(config.dt > 0.0) || config.dt > limit {
        return Err(Error::StepTooLarge { dt: config.dt, limit });
    }
    if !(config.t_end > 0.0 && config.t_end.is_finite()) {
        return Err(Error::InvalidTime(config.t_end));
    }
    let h = config.dt;
    let schedule = Schedule::new(&p, events, h)?;
    let mut params = schedule.initial;
    let mut x = averaged_equilibrium(&params);
    let n = (config.t_end / h * (1.0 - 1e-12)).ceil() as usize;
    let mut samples = Vec::with_capacity(n + 1);
    for k in 0..=n {
        schedule.apply(k, &mut params);
        samples.push(averaged_output(&params, x));
        if k == n {
            break;
        }
        let pk = params;
        x = rk4_step(|s| averaged_rhs(&pk, s), x, h);
        // the diode keeps the averaged inductor current non-negative
        x.i_l = x.i_l.max(0.0);
        if !x.is_finite() {
            return Err(Error::NonFiniteState((k + 1) as f64 * h));
        }
    }
    Waveform::new(0.0, h, samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    On,
    Off,
}

/// One integration substep of the switched simulation, wholly inside one
/// switch phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSegment {
    pub t0: f64,
    pub t1: f64,
    pub phase: Phase,
    pub v_i: f64,
    pub r_0: f64,
    pub i_l0: f64,
    pub v_c0: f64,
    pub i_l1: f64,
    pub v_c1: f64,
}

/// Output and trace of [`simulate_switched`].
#[derive(Debug, Clone)]
pub struct SwitchedRun {
    pub params: ConverterParams,
    pub steps_per_cycle: usize,
    /// Output node voltage on the uniform step grid.
    pub waveform: Waveform,
    pub trace: Vec<TraceSegment>,
    pub flags: Vec<Flag>,
}

impl SwitchedRun {
    /// Output averaged over one switching period around each sample.
    pub fn cycle_averaged(&self) -> Waveform {
        self.waveform.moving_average(self.steps_per_cycle)
    }
}

/// Node quantities of one phase: (output voltage, capacitor current).
fn node(p: &ConverterParams, phase: Phase, x: State) -> (f64, f64) {
    let q = p.r_0 + p.r_c;
    match phase {
        Phase::On => {
            let i_c = -x.v_c / q;
            (x.v_c * p.r_0 / q, i_c)
        }
        Phase::Off => {
            let v_out = (x.v_c + p.r_c * x.i_l) * p.r_0 / q;
            (v_out, x.i_l - v_out / p.r_0)
        }
    }
}

fn switched_rhs(p: &ConverterParams, phase: Phase, x: State) -> State {
    let (v_out, i_c) = node(p, phase, x);
    let di = match phase {
        Phase::On => (p.v_i - x.i_l * (p.r_l + p.r_m)) / p.l,
        Phase::Off => {
            let di = (p.v_i - x.i_l * p.r_l - p.v_d - v_out) / p.l;
            // the diode blocks reverse current
            if x.i_l <= 0.0 && di < 0.0 {
                0.0
            } else {
                di
            }
        }
    };
    State {
        i_l: di,
        v_c: i_c / p.c,
    }
}

/// Cycle-by-cycle simulation of the two switch phases.
///
/// Each period is split into `steps_per_cycle` equal RK4 steps; a step that
/// straddles the turn-off instant is split into two substeps there. Events
/// are snapped to the nearest step boundary. When the inductor current
/// reaches zero during the off phase it is held at zero and the run is
/// flagged as discontinuous conduction.
pub fn simulate_switched(
    p: &ConverterParams,
    events: &[StepEvent],
    steps_per_cycle: usize,
    t_end: f64,
) -> Result<SwitchedRun> {
    let p = p.checked()?;
    if steps_per_cycle < 50 {
        return Err(Error::InvalidSolver(format!(
            "steps_per_cycle must be at least 50, got {steps_per_cycle}"
        )));
    }
    let period = p.period();
    if !(t_end.is_finite() && t_end >= 20.0 * period * (1.0 - 1e-9)) {
        return Err(Error::InvalidSolver(format!(
            "t_end {t_end} s covers fewer than 20 switching periods of {period} s"
        )));
    }
    let h = period / steps_per_cycle as f64;
    let t_on = p.d * period;
    let schedule = Schedule::new(&p, events, h)?;
    let mut params = schedule.initial;
    let mut x = averaged_equilibrium(&params);
    let n = (t_end / h).round() as usize;
    let mut samples = Vec::with_capacity(n + 1);
    let mut trace = Vec::with_capacity(n + n / steps_per_cycle + 1);
    let mut dcm = false;

    let phase_at = |t_in_cycle: f64| if t_in_cycle < t_on { Phase::On } else { Phase::Off };
    for k in 0..=n {
        schedule.apply(k, &mut params);
        let j = k % steps_per_cycle;
        let local = j as f64 * h;
        samples.push(node(&params, phase_at(local), x).0);
        if k == n {
            break;
        }
        let cycle_start = (k / steps_per_cycle) as f64 * period;
        let t_start = k as f64 * h;
        let local_end = local + h;
        let mut cuts = vec![(local, phase_at(local))];
        if local < t_on && local_end > t_on {
            cuts.push((t_on, Phase::Off));
        }
        cuts.push((local_end, Phase::Off));
        for w in cuts.windows(2) {
            let ((a, phase), (b, _)) = (w[0], w[1]);
            let pk = params;
            let x0 = x;
            x = rk4_step(|s| switched_rhs(&pk, phase, s), x, b - a);
            if x.i_l < 0.0 {
                x.i_l = 0.0;
                if phase == Phase::Off {
                    dcm = true;
                }
            }
            if !x.is_finite() {
                return Err(Error::NonFiniteState(cycle_start + b));
            }
            let (t0, t1) = if a == local {
                (t_start, cycle_start + b)
            } else {
                (cycle_start + a, cycle_start + b)
            };
            let t1 = if b == local_end { t_start + h } else { t1 };
            trace.push(TraceSegment {
                t0,
                t1,
                phase,
                v_i: pk.v_i,
                r_0: pk.r_0,
                i_l0: x0.i_l,
                v_c0: x0.v_c,
                i_l1: x.i_l,
                v_c1: x.v_c,
            });
        }
    }
    let mut flags = Vec::new();
    if dcm {
        flags.push(Flag::DiscontinuousConduction);
    }
    Ok(SwitchedRun {
        params: p,
        steps_per_cycle,
        waveform: Waveform::new(0.0, h, samples)?,
        trace,
        flags,
    })
}

/// Energy terms over an audit window, J.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyBreakdown {
    /// Energy drawn from the source.
    pub e_in: f64,
    /// Energy passed on by the inductor: source energy less its stored-energy gain.
    pub e_l: f64,
    /// Change of energy stored on the capacitor.
    pub e_c: f64,
    /// Load dissipation.
    pub e_r: f64,
    pub e_vd: f64,
    pub e_rm: f64,
    pub e_rl: f64,
    pub e_rc: f64,
    /// `e_l - (e_c + e_r + e_vd + e_rm + e_rl + e_rc)`.
    pub residual: f64,
}

/// Balances the energy terms over `[t0, t1]` of a switched run.
///
/// Integrals use the trapezoidal rule on the stored substep end points;
/// the window is snapped to the nearest substep boundaries.
pub fn energy_audit(run: &SwitchedRun, t0: f64, t1: f64) -> Result<EnergyBreakdown> {
    let (start, end) = match (run.trace.first(), run.trace.last()) {
        (Some(a), Some(b)) => (a.t0, b.t1),
        _ => return Err(Error::WindowOutOfRange { t0, t1 }),
    };
    let slack = 1e-9 * (end - start);
    if !(t0 >= start - slack && t1 <= end + slack && t1 >= t0) {
        return Err(Error::WindowOutOfRange { t0, t1 });
    }
    let p = run.params;
    let mut out = EnergyBreakdown::default();
    let h = run.waveform.dt();
    let mut first: Option<&TraceSegment> = None;
    let mut last: Option<&TraceSegment> = None;
    for seg in &run.trace {
        let mid = 0.5 * (seg.t0 + seg.t1);
        if mid < t0 || mid > t1 || (seg.t1 - seg.t0) <= 0.0 {
            continue;
        }
        if seg.t0 < t0 - 0.5 * h || seg.t1 > t1 + 0.5 * h {
            continue;
        }
        first.get_or_insert(seg);
        last = Some(seg);
        let sp = ConverterParams {
            v_i: seg.v_i,
            r_0: seg.r_0,
            ..p
        };
        let dt = seg.t1 - seg.t0;
        let a = State {
            i_l: seg.i_l0,
            v_c: seg.v_c0,
        };
        let b = State {
            i_l: seg.i_l1,
            v_c: seg.v_c1,
        };
        let (vo_a, ic_a) = node(&sp, seg.phase, a);
        let (vo_b, ic_b) = node(&sp, seg.phase, b);
        let trap = |fa: f64, fb: f64| 0.5 * dt * (fa + fb);
        let i2 = trap(a.i_l * a.i_l, b.i_l * b.i_l);
        out.e_in += trap(sp.v_i * a.i_l, sp.v_i * b.i_l);
        out.e_r += trap(vo_a * vo_a, vo_b * vo_b) / sp.r_0;
        out.e_rl += i2 * sp.r_l;
        out.e_rc += trap(ic_a * ic_a, ic_b * ic_b) * sp.r_c;
        match seg.phase {
            Phase::On => out.e_rm += i2 * sp.r_m,
            Phase::Off => out.e_vd += trap(sp.v_d * a.i_l, sp.v_d * b.i_l),
        }
    }
    if let (Some(a), Some(b)) = (first, last) {
        let dw_l = 0.5 * p.l * (b.i_l1 * b.i_l1 - a.i_l0 * a.i_l0);
        out.e_l = out.e_in - dw_l;
        out.e_c = 0.5 * p.c * (b.v_c1 * b.v_c1 - a.v_c0 * a.v_c0);
    }
    out.residual = out.e_l - (out.e_c + out.e_r + out.e_vd + out.e_rm + out.e_rl + out.e_rc);
    Ok(out)
}
