//! Time integration: fixed-step RK4 and the adaptive embedded
//! Dormand-Prince 5(4) pair, with transient discarding and peak extraction.
//!
//! The exact flow keeps the nonnegative cone invariant, so discretization
//! undershoots below zero are diagnostic: magnitudes up to
//! [`CLAMP_TOLERANCE`] are clamped to zero and counted, anything larger
//! aborts the run as an integrator failure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{vector_field, ModelVariant, State, COMPONENT_NAMES};
use crate::params::ParameterSet;

/// Largest negative undershoot that is silently clamped to zero.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

/// Positive values below this flush to zero: a compartment this small is
/// extinct. The model's oscillatory dips span at most ~30 orders of
/// magnitude (N bottoms out around 1e-14 on the widest cycles), so only
/// monotonically dying compartments ever reach the floor — and letting them
/// crawl on toward 1e-308 would drag the arithmetic through subnormal
/// territory for thousands of time units at a large hardware penalty.
pub const STATE_FLOOR: f64 = 1e-150;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    Rk4Fixed,
    Dp54Adaptive,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Rk4Fixed => "rk4-fixed",
            Scheme::Dp54Adaptive => "dp54-adaptive",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rk4" | "rk4-fixed" => Ok(Scheme::Rk4Fixed),
            "dp54" | "dp54-adaptive" => Ok(Scheme::Dp54Adaptive),
            other => Err(format!("unknown scheme `{other}` (rk4|dp54)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Step size for `Rk4Fixed`; initial step for `Dp54Adaptive`.
    pub dt: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub t_end: f64,
    /// Time span discarded before recording starts.
    pub transient: f64,
    /// Record every k-th accepted step (memory control on long runs).
    pub record_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            scheme: Scheme::Dp54Adaptive,
            dt: 0.01,
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            dt_min: 1e-10,
            dt_max: 1.0,
            t_end: 1e4,
            transient: 5e3,
            record_stride: 1,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegrateError> {
        if !(self.dt > 0.0) || !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(IntegrateError::InvalidConfig(
                "dt, abs_tol and rel_tol must be positive".into(),
            ));
        }
        if !(self.dt_min > 0.0) || self.dt_min > self.dt_max {
            return Err(IntegrateError::InvalidConfig(
                "requires 0 < dt_min <= dt_max".into(),
            ));
        }
        if !(self.t_end > 0.0) || self.transient < 0.0 || self.transient >= self.t_end {
            return Err(IntegrateError::InvalidConfig(
                "requires 0 <= transient < t_end".into(),
            ));
        }
        if self.record_stride == 0 {
            return Err(IntegrateError::InvalidConfig(
                "record_stride must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryMeta {
    pub scheme: &'static str,
    pub steps_accepted: u64,
    pub steps_rejected: u64,
    pub clamped: u64,
    /// Componentwise running maxima over the whole run, transient included.
    pub max_components: [f64; 4],
    pub smallest_dt: f64,
    pub largest_dt: f64,
}

/// Recorded post-transient trajectory with strictly increasing times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<(f64, State)> {
        match (self.times.last(), self.states.last()) {
            (Some(&t), Some(&s)) => Some((t, s)),
            _ => None,
        }
    }

    /// Linear interpolation between recorded samples (dense output).
    pub fn sample_linear(&self, t: f64) -> Option<State> {
        if self.times.is_empty() {
            return None;
        }
        if t <= self.times[0] {
            return Some(self.states[0]);
        }
        if t >= *self.times.last().unwrap() {
            return Some(*self.states.last().unwrap());
        }
        let idx = self.times.partition_point(|&x| x < t);
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let (a, b) = (self.states[idx - 1], self.states[idx]);
        let w = (t - t0) / (t1 - t0);
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = a.0[i] + w * (b.0[i] - a.0[i]);
        }
        Some(State(out))
    }

    /// One component of every recorded state.
    pub fn component(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.0[index]).collect()
    }
}

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("step size underflow at t = {t}: dt = {dt:.3e} < dt_min = {dt_min:.3e}")]
    StepSizeUnderflow {
        t: f64,
        dt: f64,
        dt_min: f64,
        partial: Box<Trajectory>,
    },
    #[error("state left the nonnegative cone at t = {t}: {component} = {value:.3e}")]
    NegativeState {
        t: f64,
        component: &'static str,
        value: f64,
    },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid integrator config: {0}")]
    InvalidConfig(String),
    #[error("initial state {0} is outside the nonnegative cone")]
    BadInitialState(State),
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step<const N: usize>(
    f: &impl Fn(&[f64; N]) -> [f64; N],
    y: &[f64; N],
    dt: f64,
) -> [f64; N] {
    let k1 = f(y);
    let mut tmp = [0.0; N];
    for i in 0..N {
        tmp[i] = y[i] + 0.5 * dt * k1[i];
    }
    let k2 = f(&tmp);
    for i in 0..N {
        tmp[i] = y[i] + 0.5 * dt * k2[i];
    }
    let k3 = f(&tmp);
    for i in 0..N {
        tmp[i] = y[i] + dt * k3[i];
    }
    let k4 = f(&tmp);
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Fifth-order solution and embedded fourth-order error estimate of one
/// Dormand-Prince 5(4) step.
pub struct Dp54Step<const N: usize> {
    pub y5: [f64; N],
    pub error: [f64; N],
}

/// One Dormand-Prince 5(4) step (seven stages).
pub fn dp54_step<const N: usize>(
    f: &impl Fn(&[f64; N]) -> [f64; N],
    y: &[f64; N],
    dt: f64,
) -> Dp54Step<N> {
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    // Fifth-order weights (also the seventh-stage coefficients).
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    // Difference between the fifth- and fourth-order weights.
    const E1: f64 = 71.0 / 57600.0;
    const E3: f64 = -71.0 / 16695.0;
    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0;
    const E6: f64 = 22.0 / 525.0;
    const E7: f64 = -1.0 / 40.0;

    let mut tmp = [0.0; N];
    let k1 = f(y);
    for i in 0..N {
        tmp[i] = y[i] + dt * A21 * k1[i];
    }
    let k2 = f(&tmp);
    for i in 0..N {
        tmp[i] = y[i] + dt * (A31 * k1[i] + A32 * k2[i]);
    }
    let k3 = f(&tmp);
    for i in 0..N {
        tmp[i] = y[i] + dt * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    let k4 = f(&tmp);
    for i in 0..N {
        tmp[i] = y[i] + dt * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    let k5 = f(&tmp);
    for i in 0..N {
        tmp[i] =
            y[i] + dt * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    let k6 = f(&tmp);
    let mut y5 = [0.0; N];
    for i in 0..N {
        y5[i] = y[i] + dt * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
    }
    let k7 = f(&y5);
    let mut error = [0.0; N];
    for i in 0..N {
        error[i] = dt
            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Dp54Step { y5, error }
}

// Clamp policy shared by every state integrator: tiny undershoots and
// extinct compartments snap to zero, larger undershoots abort.
fn clamp_state(s: &mut State, t: f64, clamped: &mut u64) -> Result<(), IntegrateError> {
    for i in 0..4 {
        let v = s.0[i];
        if !v.is_finite() {
            return Err(IntegrateError::NonFinite { t });
        }
        if v < 0.0 {
            if v >= -CLAMP_TOLERANCE {
                s.0[i] = 0.0;
                *clamped += 1;
            } else {
                return Err(IntegrateError::NegativeState {
                    t,
                    component: COMPONENT_NAMES[i],
                    value: v,
                });
            }
        } else if v < STATE_FLOOR && v > 0.0 {
            s.0[i] = 0.0;
            *clamped += 1;
        }
    }
    Ok(())
}

/// Integrate the model from `s0`, recording the post-transient trajectory.
pub fn integrate(
    p: &ParameterSet,
    s0: State,
    cfg: &IntegratorConfig,
    variant: ModelVariant,
) -> Result<Trajectory, IntegrateError> {
    cfg.validate()?;
    if !s0.in_nonnegative_cone() || !s0.is_finite() {
        return Err(IntegrateError::BadInitialState(s0));
    }
    let f = |y: &[f64; 4]| vector_field(p, State(*y), variant).0;
    let mut meta = TrajectoryMeta {
        scheme: cfg.scheme.name(),
        steps_accepted: 0,
        steps_rejected: 0,
        clamped: 0,
        max_components: s0.0,
        smallest_dt: f64::INFINITY,
        largest_dt: 0.0,
    };
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut t = 0.0_f64;
    let mut s = s0;
    let mut since_record = 0usize;

    let mut record = |t: f64, s: State, meta: &mut TrajectoryMeta, since: &mut usize| {
        for i in 0..4 {
            meta.max_components[i] = meta.max_components[i].max(s.0[i]);
        }
        if t >= cfg.transient {
            if *since == 0 {
                times.push(t);
                states.push(s);
            }
            *since = (*since + 1) % cfg.record_stride;
        }
    };
    record(t, s, &mut meta, &mut since_record);

    match cfg.scheme {
        Scheme::Rk4Fixed => {
            let n_steps = (cfg.t_end / cfg.dt).round().max(1.0) as u64;
            let dt = cfg.t_end / n_steps as f64;
            meta.smallest_dt = dt;
            meta.largest_dt = dt;
            for k in 1..=n_steps {
                s = State(rk4_step(&f, &s.0, dt));
                t = cfg.t_end * (k as f64) / (n_steps as f64);
                clamp_state(&mut s, t, &mut meta.clamped)?;
                meta.steps_accepted += 1;
                record(t, s, &mut meta, &mut since_record);
            }
        }
        Scheme::Dp54Adaptive => {
            let mut dt = cfg.dt.min(cfg.dt_max);
            while t < cfg.t_end {
                let remaining = cfg.t_end - t;
                if remaining <= cfg.t_end * f64::EPSILON * 4.0 {
                    break;
                }
                dt = dt.min(remaining);
                let step = dp54_step(&f, &s.0, dt);
                let mut err_sq = 0.0;
                for i in 0..4 {
                    let scale =
                        cfg.abs_tol + cfg.rel_tol * s.0[i].abs().max(step.y5[i].abs());
                    let e = step.error[i] / scale;
                    err_sq += e * e;
                }
                let err_norm = (err_sq / 4.0).sqrt();
                if err_norm <= 1.0 {
                    t += dt;
                    s = State(step.y5);
                    clamp_state(&mut s, t, &mut meta.clamped)?;
                    meta.steps_accepted += 1;
                    meta.smallest_dt = meta.smallest_dt.min(dt);
                    meta.largest_dt = meta.largest_dt.max(dt);
                    record(t, s, &mut meta, &mut since_record);
                } else {
                    meta.steps_rejected += 1;
                }
                // NaN error norms (overflowed stages) count as maximal error.
                let factor = if err_norm > 0.0 && err_norm.is_finite() {
                    (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
                } else if err_norm == 0.0 {
                    5.0
                } else {
                    0.2
                };
                let next_dt = (dt * factor).min(cfg.dt_max);
                if next_dt < cfg.dt_min && t < cfg.t_end {
                    return Err(IntegrateError::StepSizeUnderflow {
                        t,
                        dt: next_dt,
                        dt_min: cfg.dt_min,
                        partial: Box::new(Trajectory {
                            times,
                            states,
                            meta,
                        }),
                    });
                }
                dt = next_dt;
            }
        }
    }

    Ok(Trajectory {
        times,
        states,
        meta,
    })
}

/// Integrate and return the states at exactly the requested times.
///
/// `times` must be nonnegative and strictly increasing; integration starts at
/// `t = times[0]` from `s0` (the model is autonomous, so only spacing
/// matters). Steps are clipped to land on each target time.
pub fn integrate_at(
    p: &ParameterSet,
    s0: State,
    times: &[f64],
    cfg: &IntegratorConfig,
    variant: ModelVariant,
) -> Result<Vec<State>, IntegrateError> {
    if times.is_empty() {
        return Ok(Vec::new());
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(IntegrateError::InvalidConfig(
            "sample times must be strictly increasing".into(),
        ));
    }
    if !s0.in_nonnegative_cone() || !s0.is_finite() {
        return Err(IntegrateError::BadInitialState(s0));
    }
    let f = |y: &[f64; 4]| vector_field(p, State(*y), variant).0;
    let mut out = Vec::with_capacity(times.len());
    let mut s = s0;
    let mut t = times[0];
    let mut clamped = 0u64;
    out.push(s);
    for &target in &times[1..] {
        match cfg.scheme {
            Scheme::Rk4Fixed => {
                let span = target - t;
                let n = (span / cfg.dt).ceil().max(1.0) as u64;
                let dt = span / n as f64;
                for _ in 0..n {
                    s = State(rk4_step(&f, &s.0, dt));
                    t += dt;
                    clamp_state(&mut s, t, &mut clamped)?;
                }
                t = target;
            }
            Scheme::Dp54Adaptive => {
                let mut dt = cfg.dt.min(cfg.dt_max);
                while t < target {
                    let remaining = target - t;
                    if remaining <= target.abs().max(1.0) * f64::EPSILON * 4.0 {
                        break;
                    }
                    dt = dt.min(remaining);
                    let step = dp54_step(&f, &s.0, dt);
                    let mut err_sq = 0.0;
                    for i in 0..4 {
                        let scale =
                            cfg.abs_tol + cfg.rel_tol * s.0[i].abs().max(step.y5[i].abs());
                        let e = step.error[i] / scale;
                        err_sq += e * e;
                    }
                    let err_norm = (err_sq / 4.0).sqrt();
                    if err_norm <= 1.0 {
                        t += dt;
                        s = State(step.y5);
                        clamp_state(&mut s, t, &mut clamped)?;
                    }
                    let factor = if err_norm > 0.0 && err_norm.is_finite() {
                        (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
                    } else if err_norm == 0.0 {
                        5.0
                    } else {
                        0.2
                    };
                    dt = (dt * factor).min(cfg.dt_max);
                    if dt < cfg.dt_min && t < target {
                        return Err(IntegrateError::StepSizeUnderflow {
                            t,
                            dt,
                            dt_min: cfg.dt_min,
                            partial: Box::new(Trajectory {
                                times: vec![],
                                states: vec![],
                                meta: TrajectoryMeta {
                                    scheme: cfg.scheme.name(),
                                    steps_accepted: 0,
                                    steps_rejected: 0,
                                    clamped,
                                    max_components: s.0,
                                    smallest_dt: dt,
                                    largest_dt: dt,
                                },
                            }),
                        });
                    }
                }
                t = target;
            }
        }
        out.push(s);
    }
    Ok(out)
}

#[derive(Debug, Error)]
pub enum OrderError {
    #[error("trajectory is degenerate (errors below {floor:.0e}); order is undefined")]
    Degenerate { floor: f64 },
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

const ORDER_ERROR_FLOOR: f64 = 1e-13;

/// Measured convergence order of a scheme by Richardson step-halving on a
/// short horizon, for an arbitrary autonomous system.
///
/// The reference solution uses the same scheme at `dt/64`. Constant
/// (equilibrium) trajectories make the measurement 0/0 and are rejected.
pub fn convergence_order_for<const N: usize>(
    f: &impl Fn(&[f64; N]) -> [f64; N],
    scheme: Scheme,
    y0: &[f64; N],
    horizon: f64,
    dt: f64,
) -> Result<f64, OrderError> {
    let advance = |dt: f64| -> [f64; N] {
        let n = (horizon / dt).round().max(1.0) as u64;
        let dt = horizon / n as f64;
        let mut y = *y0;
        for _ in 0..n {
            y = match scheme {
                Scheme::Rk4Fixed => rk4_step(f, &y, dt),
                Scheme::Dp54Adaptive => dp54_step(f, &y, dt).y5,
            };
        }
        y
    };
    let reference = advance(dt / 64.0);
    let err = |y: &[f64; N]| {
        let mut m = 0.0_f64;
        for i in 0..N {
            m = m.max((y[i] - reference[i]).abs());
        }
        m
    };
    let e1 = err(&advance(dt));
    let e2 = err(&advance(dt / 2.0));
    if e1 < ORDER_ERROR_FLOOR || e2 < ORDER_ERROR_FLOOR {
        return Err(OrderError::Degenerate {
            floor: ORDER_ERROR_FLOOR,
        });
    }
    Ok((e1 / e2).log2())
}

/// Measured convergence order on the model itself.
pub fn convergence_order(
    scheme: Scheme,
    p: &ParameterSet,
    s0: State,
) -> Result<f64, OrderError> {
    let f = |y: &[f64; 4]| vector_field(p, State(*y), ModelVariant::Full).0;
    convergence_order_for(&f, scheme, &s0.0, 10.0, 0.5)
}

/// A refined local maximum of a sampled series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub t: f64,
    pub value: f64,
}

/// Local maxima of `(ts, ys)`, refined by a quadratic fit through the three
/// samples around each discrete maximum.
///
/// A sample counts as a maximum when it exceeds both neighbors by at least
/// `min_prominence`.
pub fn find_peaks(ts: &[f64], ys: &[f64], min_prominence: f64) -> Vec<Peak> {
    assert_eq!(ts.len(), ys.len());
    let mut peaks = Vec::new();
    for i in 1..ys.len().saturating_sub(1) {
        if ys[i] - ys[i - 1] >= min_prominence && ys[i] - ys[i + 1] >= min_prominence {
            peaks.push(refine_peak(
                (ts[i - 1], ys[i - 1]),
                (ts[i], ys[i]),
                (ts[i + 1], ys[i + 1]),
            ));
        }
    }
    peaks
}

// Vertex of the parabola through three (t, y) points; falls back to the
// middle sample when the points are collinear.
fn refine_peak(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Peak {
    let (t0, y0) = a;
    let (t1, y1) = b;
    let (t2, y2) = c;
    let d0 = (y1 - y0) / (t1 - t0);
    let d1 = (y2 - y1) / (t2 - t1);
    let curv = (d1 - d0) / (t2 - t0);
    if curv >= 0.0 || !curv.is_finite() {
        return Peak { t: t1, value: y1 };
    }
    // y(t) = y1 + d0*(t-t0... ) expressed around the divided differences:
    // vertex of q(t) = y0 + d0 (t - t0) + curv (t - t0)(t - t1).
    let tv = 0.5 * (t0 + t1 - d0 / curv);
    let value = y0 + d0 * (tv - t0) + curv * (tv - t0) * (tv - t1);
    Peak { t: tv, value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quick_cfg(scheme: Scheme, t_end: f64, transient: f64) -> IntegratorConfig {
        IntegratorConfig {
            scheme,
            t_end,
            transient,
            ..IntegratorConfig::default()
        }
    }

    #[test]
    fn fixed_point_start_stays_constant() {
        let p = ParameterSet::colorado();
        for scheme in [Scheme::Rk4Fixed, Scheme::Dp54Adaptive] {
            let cfg = quick_cfg(scheme, 50.0, 0.0);
            let traj = integrate(&p, State::ZERO, &cfg, ModelVariant::Full).unwrap();
            for s in &traj.states {
                assert_eq!(s.0, [0.0; 4]);
            }
        }
    }

    #[test]
    fn recorded_times_strictly_increase() {
        let p = ParameterSet::washington();
        let cfg = quick_cfg(Scheme::Dp54Adaptive, 200.0, 50.0);
        let traj = integrate(&p, State::new(0.8, 0.1, 0.05, 0.05), &cfg, ModelVariant::Full)
            .unwrap();
        assert!(traj.len() > 2);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert!(traj.times[0] >= 50.0);
    }

    #[test]
    fn deterministic_reruns_are_bit_identical() {
        let p = ParameterSet::colorado();
        for scheme in [Scheme::Rk4Fixed, Scheme::Dp54Adaptive] {
            let cfg = quick_cfg(scheme, 300.0, 100.0);
            let s0 = State::new(0.8, 0.1, 0.05, 0.05);
            let a = integrate(&p, s0, &cfg, ModelVariant::Full).unwrap();
            let b = integrate(&p, s0, &cfg, ModelVariant::Full).unwrap();
            assert_eq!(a.times, b.times);
            assert!(a
                .states
                .iter()
                .zip(&b.states)
                .all(|(x, y)| x.0 == y.0));
        }
    }

    #[test]
    fn saddle_focus_start_drifts_away() {
        // I2 is unstable (complex pair with positive real part). The state
        // stored for I2 is a rounding fixed point of the stepper (the field
        // there is ~1e-19, below one ulp per step), so a one-ulp-scale nudge
        // stands in for the rounding noise of any longer pipeline.
        let p = ParameterSet::colorado();
        let mut i2 = crate::equilibria::closed_form_equilibria(&p)[2].state;
        i2.0[1] += 1e-12;
        let cfg = IntegratorConfig {
            scheme: Scheme::Dp54Adaptive,
            t_end: 1.5e5,
            transient: 0.0,
            dt_max: 20.0,
            record_stride: 100,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&p, i2, &cfg, ModelVariant::Full).unwrap();
        let max_dist = traj
            .states
            .iter()
            .map(|s| s.distance_max(&i2))
            .fold(0.0_f64, f64::max);
        assert!(max_dist > 1e-3, "max distance {max_dist}");
    }

    #[test]
    fn integrate_at_hits_sample_times() {
        let p = ParameterSet::colorado();
        let times = [0.0, 1.0, 2.5, 7.0];
        let s0 = State::new(0.8, 0.1, 0.05, 0.05);
        let cfg = IntegratorConfig::default();
        let at = integrate_at(&p, s0, &times, &cfg, ModelVariant::Full).unwrap();
        assert_eq!(at.len(), times.len());
        assert_eq!(at[0].0, s0.0);
        // Cross-check against a dense recorded trajectory.
        let dense_cfg = IntegratorConfig {
            scheme: Scheme::Rk4Fixed,
            dt: 1e-3,
            t_end: 7.0,
            transient: 0.0,
            ..IntegratorConfig::default()
        };
        let dense = integrate(&p, s0, &dense_cfg, ModelVariant::Full).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let want = dense.sample_linear(t).unwrap();
            assert!(at[i].distance_max(&want) < 1e-6, "at t = {t}");
        }
    }

    #[test]
    fn rk4_order_is_four() {
        let p = ParameterSet::colorado();
        let order =
            convergence_order(Scheme::Rk4Fixed, &p, State::new(0.8, 0.1, 0.05, 0.05)).unwrap();
        assert!((order - 4.0).abs() < 0.2, "measured order {order}");
    }

    #[test]
    fn dp54_order_on_linear_decay() {
        // Scalar dN/dt = -N.
        let f = |y: &[f64; 1]| [-y[0]];
        let order = convergence_order_for(&f, Scheme::Dp54Adaptive, &[1.0], 5.0, 0.5).unwrap();
        assert!(order >= 4.7, "measured order {order}");
    }

    #[test]
    fn order_rejects_equilibrium_trajectory() {
        let p = ParameterSet::colorado();
        let err = convergence_order(Scheme::Rk4Fixed, &p, State::ZERO).unwrap_err();
        assert!(matches!(err, OrderError::Degenerate { .. }));
    }

    #[test]
    fn peaks_of_a_sine_are_refined() {
        let ts: Vec<f64> = (0..1000).map(|i| i as f64 * 0.02).collect();
        let ys: Vec<f64> = ts.iter().map(|t| (1.3 * t).sin()).collect();
        let peaks = find_peaks(&ts, &ys, 1e-12);
        assert!(!peaks.is_empty());
        for p in peaks {
            assert_relative_eq!(p.value, 1.0, epsilon = 1e-4);
        }
    }

    #[test]
    fn flat_series_has_no_peaks() {
        let ts: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let ys = vec![0.25; 100];
        assert!(find_peaks(&ts, &ys, 1e-12).is_empty());
    }
}
