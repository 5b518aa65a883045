//! Explicit Euler integration of the nodal ODE system with a reject/shrink
//! controller that keeps every accepted state inside
//! `u >= 0`, `0 < v <= Vmax`, where `Vmax = max v(0)`.

use crate::diagnostics::{snapshot, DiagnosticsRecord, Monitor};
use crate::error::{Bound, SchemeError, StepError};
use crate::scheme::{Discretization, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub growth: f64,
    pub shrink: f64,
    /// Admissibility slack; violations below it are clamped away.
    pub bound_tol: f64,
    pub t_end: f64,
    pub max_rejects: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            dt_init: 1e-4,
            dt_min: 1e-12,
            dt_max: 1e-3,
            growth: 1.2,
            shrink: 0.5,
            bound_tol: 1e-12,
            t_end: 1.0,
            max_rejects: 60,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<(), StepError> {
        let bad = |m: String| Err(StepError::InvalidControl(m));
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return bad(format!(
                "need 0 < dt_min <= dt_init <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            ));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.growth >= 1.0) {
            return bad(format!("growth must be >= 1, got {}", self.growth));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad(format!("shrink must lie in (0, 1), got {}", self.shrink));
        }
        if !(self.bound_tol >= 0.0 && self.bound_tol < 1.0) {
            return bad(format!("bound_tol must lie in [0, 1), got {}", self.bound_tol));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub min_dt: f64,
    pub max_dt: f64,
    /// Largest `|Σ m u' - Σ m u| / Σ m u` over accepted candidates, before clamping.
    pub max_mass_drift_pre_clamp: f64,
    /// Total mass added to `u` by clamping sub-tolerance negatives.
    pub clamped_mass: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// States at `t = 0`, every output time and `t_end`.
    pub snapshots: Vec<State>,
    pub records: Vec<DiagnosticsRecord>,
    pub stats: StepStats,
    pub v_max: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        self.snapshots.last().expect("trajectory holds the initial state")
    }
}

/// Notifications emitted while advancing.
pub enum Event<'a> {
    /// An accepted step (also emitted once for the initial state).
    Step { state: &'a State, record: &'a DiagnosticsRecord },
    /// The state at an output time.
    Output { state: &'a State },
}

/// One explicit Euler step: `(u, v) + dt (F^u, F^v)`, `t + dt`.
pub fn step_euler(state: &State, dt: f64, disc: &Discretization) -> Result<State, SchemeError> {
    let fu = disc.rhs_u(state)?;
    let fv = disc.rhs_v(state);
    Ok(euler_update(state, dt, &fu, &fv))
}

fn euler_update(state: &State, dt: f64, fu: &[f64], fv: &[f64]) -> State {
    State {
        u: state.u.iter().zip(fu).map(|(u, f)| u + dt * f).collect(),
        v: state.v.iter().zip(fv).map(|(v, f)| v + dt * f).collect(),
        t: state.t + dt,
    }
}

fn first_violation(c: &State, v_max: f64, tol: f64) -> Option<(usize, Bound, f64)> {
    if let Some((i, &u)) = c.u.iter().enumerate().find(|(_, &u)| !(u >= -tol)) {
        return Some((i, Bound::UNonNegative, u));
    }
    if let Some((i, &v)) = c.v.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Some((i, Bound::VPositive, v));
    }
    if let Some((i, &v)) = c.v.iter().enumerate().find(|(_, &v)| v > v_max * (1.0 + tol)) {
        return Some((i, Bound::VMax, v));
    }
    None
}

/// Integrates from `initial` to `control.t_end`, collecting snapshots every
/// `output_every` (if given) and a diagnostics record per accepted step.
pub fn advance(
    initial: State,
    control: &StepControl,
    disc: &Discretization,
    output_every: Option<f64>,
) -> Result<Trajectory, StepError> {
    let mut snapshots = Vec::new();
    let mut monitor = Monitor::new();
    let (stats, v_max) = advance_observed(initial, control, disc, output_every, |ev| match ev {
        Event::Step { record, .. } => {
            monitor.push(*record);
        }
        Event::Output { state } => snapshots.push(state.clone()),
    })?;
    Ok(Trajectory { snapshots, records: monitor.into_records(), stats, v_max })
}

/// Like [`advance`] but streams events to `observer` instead of storing them.
/// Returns the step statistics and `Vmax`.
pub fn advance_observed(
    initial: State,
    control: &StepControl,
    disc: &Discretization,
    output_every: Option<f64>,
    mut observer: impl FnMut(Event<'_>),
) -> Result<(StepStats, f64), StepError> {
    control.validate()?;
    if let Some(every) = output_every {
        if !(every > 0.0) {
            return Err(StepError::InvalidControl(format!("output interval must be positive, got {every}")));
        }
    }
    let v_max = initial.v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Err((node, bound)) = initial.check_bounds(v_max) {
        let value = if bound == Bound::UNonNegative { initial.u[node] } else { initial.v[node] };
        return Err(StepError::StepFailure { t: initial.t, dt: 0.0, node, bound, value });
    }

    let t0 = initial.t;
    let t_end = t0 + control.t_end;
    let mut state = initial;
    let mut monitor = Monitor::new();
    let rec = *monitor.push(snapshot(&state, &disc.stiffness, &disc.mass, v_max));
    observer(Event::Step { state: &state, record: &rec });
    observer(Event::Output { state: &state });

    let mut output_k = 1usize;
    let next_output = |k: usize| output_every.map_or(t_end, |e| (t0 + k as f64 * e).min(t_end));

    let mut stats = StepStats { min_dt: f64::INFINITY, ..Default::default() };
    let mut dt = control.dt_init;
    let stop_eps = 1e-12 * control.t_end;

    while t_end - state.t > stop_eps {
        let stop = next_output(output_k);
        let fu = disc.rhs_u(&state)?;
        let fv = disc.rhs_v(&state);
        let mass_before = rec_mass(&state, disc);

        let mut rejects = 0usize;
        let (candidate, h) = loop {
            let remaining = stop - state.t;
            let h = if dt >= remaining - stop_eps { remaining } else { dt };
            let cand = euler_update(&state, h, &fu, &fv);
            match first_violation(&cand, v_max, control.bound_tol) {
                None => break (cand, h),
                Some((node, bound, value)) => {
                    rejects += 1;
                    stats.rejected += 1;
                    dt = h * control.shrink;
                    if dt < control.dt_min || rejects > control.max_rejects {
                        return Err(StepError::StepFailure { t: state.t, dt: h, node, bound, value });
                    }
                }
            }
        };

        let truncated = h < dt;
        let mut next = candidate;
        let mass_after = rec_mass(&next, disc);
        if mass_before != 0.0 {
            let drift = ((mass_after - mass_before) / mass_before).abs();
            stats.max_mass_drift_pre_clamp = stats.max_mass_drift_pre_clamp.max(drift);
        }
        for (i, u) in next.u.iter_mut().enumerate() {
            if *u < 0.0 {
                stats.clamped_mass += -*u * disc.mass[i];
                *u = 0.0;
            }
        }
        for v in next.v.iter_mut() {
            *v = v.min(v_max);
        }
        if (stop - next.t).abs() <= stop_eps {
            next.t = stop;
        }

        stats.accepted += 1;
        stats.min_dt = stats.min_dt.min(h);
        stats.max_dt = stats.max_dt.max(h);
        state = next;

        let rec = *monitor.push(snapshot(&state, &disc.stiffness, &disc.mass, v_max));
        observer(Event::Step { state: &state, record: &rec });
        if state.t == stop {
            observer(Event::Output { state: &state });
            output_k += 1;
            // skip output times that coincide with t_end rounding
            while output_every.is_some() && next_output(output_k) <= state.t && state.t < t_end {
                output_k += 1;
            }
        }
        if !truncated {
            dt = (dt * control.growth).min(control.dt_max);
        }
    }
    Ok((stats, v_max))
}

fn rec_mass(state: &State, disc: &Discretization) -> f64 {
    disc.mass.integrate(&state.u)
}
