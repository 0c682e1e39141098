//! Full Lyapunov spectra via the variational flow with periodic QR
//! re-orthonormalization, and attractor classification from the sign
//! pattern of the exponents.
//!
//! The state and four tangent vectors are integrated jointly with RK4; the
//! tangent frame is re-orthonormalized every `renorm_interval` time units
//! and the logs of the R-diagonal accumulate into the exponents. Two
//! independent consistency handles come with every run:
//!
//! * the time average of the Jacobian trace along the same trajectory,
//!   which must equal the exponent sum (divergence identity), and
//! * the running-mean history, whose tail dispersion flags runs that have
//!   not settled (reported as `Unclassified` rather than silently labeled).

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrate::{rk4_step, CLAMP_TOLERANCE, STATE_FLOOR};
use crate::model::{jacobian, jacobian_trace, vector_field, ModelVariant, State, COMPONENT_NAMES};
use crate::params::ParameterSet;

/// Exponents within this band around zero count as zero when classifying.
///
/// The band must split the spectrum's genuine zeros (numerically a few 1e-5
/// to 1e-4 at the default averaging time) from the smallest physical
/// contraction rates of the model, which sit at 1e-3 in magnitude.
pub const DEFAULT_ZERO_TOLERANCE: f64 = 5e-4;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LyapunovConfig {
    pub variant: ModelVariant,
    /// RK4 step for the joint state + tangent integration.
    pub dt: f64,
    /// Time span discarded before tangents start accumulating.
    pub transient: f64,
    /// Averaging time after the transient. At the model's exponent scale
    /// (1e-2 to 1e-3) anything below ~1e4 is too noisy to classify.
    pub total_time: f64,
    pub renorm_interval: f64,
    pub zero_tolerance: f64,
    /// Fraction of the renorm history used for the settling check.
    pub convergence_tail: f64,
    /// Running-mean dispersion over the tail above which the run is
    /// reported as unconverged.
    pub convergence_threshold: f64,
    /// Keep a decimated running-mean history for plotting.
    pub record_history: bool,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        LyapunovConfig {
            variant: ModelVariant::Full,
            dt: 0.01,
            transient: 5e3,
            total_time: 2e5,
            renorm_interval: 1.0,
            zero_tolerance: DEFAULT_ZERO_TOLERANCE,
            convergence_tail: 0.1,
            convergence_threshold: 2e-3,
            record_history: false,
        }
    }
}

impl LyapunovConfig {
    pub fn validate(&self) -> Result<(), LyapunovError> {
        if !(self.dt > 0.0) || !(self.renorm_interval >= self.dt) {
            return Err(LyapunovError::InvalidConfig(
                "requires 0 < dt <= renorm_interval".into(),
            ));
        }
        if !(self.total_time >= 1e4) {
            return Err(LyapunovError::InvalidConfig(
                "total_time must be at least 1e4 for usable averages".into(),
            ));
        }
        if self.transient < 0.0 {
            return Err(LyapunovError::InvalidConfig("transient must be >= 0".into()));
        }
        if !(self.zero_tolerance > 0.0) {
            return Err(LyapunovError::InvalidConfig(
                "zero_tolerance must be positive".into(),
            ));
        }
        if !(self.convergence_tail > 0.0 && self.convergence_tail < 1.0) {
            return Err(LyapunovError::InvalidConfig(
                "convergence_tail must be in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Attractor families by exponent sign pattern (exponents sorted
/// descending, zeros per the configured tolerance band).
///
/// Two zero exponents are conventionally a 2-torus even though parts of the
/// literature tabulate that pattern as a 3-torus; the variants here carry
/// the zero count and leave the naming dispute out of the classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AttractorClass {
    /// (-,-,-,-)
    FixedPoint,
    /// (0,-,-,-)
    LimitCycle,
    /// (0,0,-,-)
    QuasiPeriodic2,
    /// (0,0,0,-)
    QuasiPeriodic3,
    /// (+,0,-,-)
    Chaos,
    /// (+,+,0,-)
    Hyperchaos,
    /// Any other pattern, or a run that failed the settling check.
    Unclassified,
}

impl AttractorClass {
    pub fn name(&self) -> &'static str {
        match self {
            AttractorClass::FixedPoint => "fixed_point",
            AttractorClass::LimitCycle => "limit_cycle",
            AttractorClass::QuasiPeriodic2 => "quasi_periodic_2",
            AttractorClass::QuasiPeriodic3 => "quasi_periodic_3",
            AttractorClass::Chaos => "chaos",
            AttractorClass::Hyperchaos => "hyperchaos",
            AttractorClass::Unclassified => "unclassified",
        }
    }

    /// Torus/quasi-periodic family (two or three zero exponents).
    pub fn is_quasi_periodic(&self) -> bool {
        matches!(
            self,
            AttractorClass::QuasiPeriodic2 | AttractorClass::QuasiPeriodic3
        )
    }
}

/// Output of [`classify`].
#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub class: AttractorClass,
    /// Sign pattern with the zero band applied, e.g. `0,-,-,-`.
    pub pattern: String,
    /// Integer attractor-dimension label: the largest prefix of the
    /// (zero-banded) exponents whose partial sum is nonnegative. 1 for a
    /// limit cycle, 2 for the two-zero torus pattern.
    pub hausdorff_label: u32,
    /// Kaplan-Yorke dimension, reported when a positive exponent exists.
    pub kaplan_yorke: Option<f64>,
}

/// Classify a descending-sorted exponent quadruple.
pub fn classify(exponents: [f64; 4], zero_tolerance: f64) -> Classification {
    let mut sorted = exponents;
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let sign = |x: f64| -> i8 {
        if x.abs() <= zero_tolerance {
            0
        } else if x > 0.0 {
            1
        } else {
            -1
        }
    };
    let signs = [
        sign(sorted[0]),
        sign(sorted[1]),
        sign(sorted[2]),
        sign(sorted[3]),
    ];
    let class = match signs {
        [-1, -1, -1, -1] => AttractorClass::FixedPoint,
        [0, -1, -1, -1] => AttractorClass::LimitCycle,
        [0, 0, -1, -1] => AttractorClass::QuasiPeriodic2,
        [0, 0, 0, -1] => AttractorClass::QuasiPeriodic3,
        [1, 0, -1, -1] => AttractorClass::Chaos,
        [1, 1, 0, -1] => AttractorClass::Hyperchaos,
        _ => AttractorClass::Unclassified,
    };
    let pattern = signs
        .iter()
        .map(|s| match s {
            0 => "0",
            1 => "+",
            _ => "-",
        })
        .collect::<Vec<_>>()
        .join(",");

    // Partial sums of the zero-banded exponents give the integer dimension
    // label and the Kaplan-Yorke interpolation.
    let effective: Vec<f64> = signs
        .iter()
        .zip(sorted.iter())
        .map(|(&s, &l)| if s == 0 { 0.0 } else { l })
        .collect();
    let mut label = 0u32;
    let mut partial = 0.0;
    let mut partial_at_label = 0.0;
    for (i, &l) in effective.iter().enumerate() {
        partial += l;
        if partial >= 0.0 {
            label = (i + 1) as u32;
            partial_at_label = partial;
        } else {
            break;
        }
    }
    let kaplan_yorke = if signs[0] == 1 {
        if (label as usize) < 4 {
            let next = effective[label as usize].abs();
            Some(label as f64 + partial_at_label / next)
        } else {
            Some(4.0)
        }
    } else {
        None
    };
    Classification {
        class: if class == AttractorClass::Unclassified {
            AttractorClass::Unclassified
        } else {
            class
        },
        pattern,
        hausdorff_label: label,
        kaplan_yorke,
    }
}

/// A computed spectrum with its consistency diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct LyapunovSpectrum {
    /// Sorted descending.
    pub exponents: [f64; 4],
    pub zero_tolerance: f64,
    pub classification: AttractorClass,
    pub pattern: String,
    pub hausdorff_label: u32,
    pub kaplan_yorke: Option<f64>,
    /// Time average of the Jacobian trace along the same trajectory; must
    /// match the exponent sum.
    pub trace_average: f64,
    /// Max over exponents of (max - min) of the running mean across the
    /// tail window.
    pub tail_dispersion: f64,
    pub converged: bool,
    /// Averaging time actually used.
    pub averaging_time: f64,
    /// Decimated running-mean history `(t, exponent estimates)`.
    pub history: Option<Vec<(f64, [f64; 4])>>,
}

impl LyapunovSpectrum {
    pub fn sum(&self) -> f64 {
        self.exponents.iter().sum()
    }
}

#[derive(Debug, Error)]
pub enum LyapunovError {
    #[error("invalid Lyapunov config: {0}")]
    InvalidConfig(String),
    #[error("tangent frame collapsed at t = {t} (|R[{index},{index}]| = {value:.3e})")]
    TangentCollapse { t: f64, index: usize, value: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("state left the nonnegative cone at t = {t}: {component} = {value:.3e}")]
    NegativeState {
        t: f64,
        component: &'static str,
        value: f64,
    },
    #[error("initial state {0} is outside the nonnegative cone")]
    BadInitialState(State),
}

const TANGENT_FLOOR: f64 = 1e-250;
const HISTORY_POINTS: usize = 2000;

// Tangent entries along extinct directions contract exponentially forever;
// flushing them once they are this small (120+ orders below anything the
// log-R accumulation can resolve) keeps the tangent arithmetic out of
// subnormal territory.
const TANGENT_FLUSH: f64 = 1e-140;

/// Lyapunov spectrum of the model from `s0`.
pub fn lyapunov_spectrum(
    p: &ParameterSet,
    s0: State,
    cfg: &LyapunovConfig,
) -> Result<LyapunovSpectrum, LyapunovError> {
    let variant = cfg.variant;
    let f = |s: &State| vector_field(p, *s, variant);
    let jac = |s: &State| jacobian(p, *s, variant);
    let trace = |s: &State| jacobian_trace(p, *s, variant);
    spectrum_for(&f, &jac, &trace, s0, cfg)
}

/// Benettin-style spectrum for an arbitrary four-dimensional system given
/// its field, Jacobian, and trace. The state components are clamped with the
/// same undershoot policy as the trajectory integrators.
pub fn spectrum_for(
    f: &impl Fn(&State) -> State,
    jac: &impl Fn(&State) -> Matrix4<f64>,
    trace: &impl Fn(&State) -> f64,
    s0: State,
    cfg: &LyapunovConfig,
) -> Result<LyapunovSpectrum, LyapunovError> {
    cfg.validate()?;
    if !s0.in_nonnegative_cone() || !s0.is_finite() {
        return Err(LyapunovError::BadInitialState(s0));
    }

    let mut s = s0;
    let mut t = 0.0;

    // Transient: state only.
    let field4 = |y: &[f64; 4]| f(&State(*y)).0;
    let n_transient = (cfg.transient / cfg.dt).round() as u64;
    for _ in 0..n_transient {
        s = State(rk4_step(&field4, &s.0, cfg.dt));
        t += cfg.dt;
        clamp(&mut s, t)?;
    }

    // Joint state + tangent integration. Layout: [state, tangent columns].
    let aug_field = |y: &[f64; 20]| -> [f64; 20] {
        let state = State([y[0], y[1], y[2], y[3]]);
        let ds = f(&state);
        let j = jac(&state);
        let mut out = [0.0; 20];
        out[..4].copy_from_slice(&ds.0);
        for col in 0..4 {
            let v = Vector4::new(
                y[4 + 4 * col],
                y[5 + 4 * col],
                y[6 + 4 * col],
                y[7 + 4 * col],
            );
            let dv = j * v;
            for row in 0..4 {
                out[4 + 4 * col + row] = dv[row];
            }
        }
        out
    };

    let mut aug = [0.0_f64; 20];
    aug[..4].copy_from_slice(&s.0);
    for i in 0..4 {
        aug[4 + 5 * i] = 1.0;
    }

    let steps_per_renorm = (cfg.renorm_interval / cfg.dt).round().max(1.0) as u64;
    let n_renorms = (cfg.total_time / (steps_per_renorm as f64 * cfg.dt)).round().max(1.0) as u64;
    let averaging_time = n_renorms as f64 * steps_per_renorm as f64 * cfg.dt;

    let mut accum = [0.0_f64; 4];
    let mut running: Vec<[f64; 4]> = Vec::with_capacity(n_renorms as usize);
    let mut trace_integral = 0.0;
    let mut prev_trace = trace(&s);
    let t_avg_start = t;

    for renorm in 0..n_renorms {
        for _ in 0..steps_per_renorm {
            aug = rk4_step(&aug_field, &aug, cfg.dt);
            t += cfg.dt;
            let mut state = State([aug[0], aug[1], aug[2], aug[3]]);
            clamp(&mut state, t)?;
            aug[..4].copy_from_slice(&state.0);
            let cur_trace = trace(&state);
            trace_integral += 0.5 * (prev_trace + cur_trace) * cfg.dt;
            prev_trace = cur_trace;
        }

        let phi = Matrix4::from_column_slice(&aug[4..20]);
        let qr = phi.qr();
        let q = qr.q();
        let r = qr.r();
        for i in 0..4 {
            let d = r[(i, i)].abs();
            if !(d > TANGENT_FLOOR) {
                return Err(LyapunovError::TangentCollapse {
                    t,
                    index: i,
                    value: d,
                });
            }
            accum[i] += d.ln();
        }
        aug[4..20].copy_from_slice(q.as_slice());
        for v in aug[4..20].iter_mut() {
            if v.abs() < TANGENT_FLUSH {
                *v = 0.0;
            }
        }

        let elapsed = (renorm + 1) as f64 * steps_per_renorm as f64 * cfg.dt;
        let mut means = [0.0; 4];
        for i in 0..4 {
            means[i] = accum[i] / elapsed;
        }
        running.push(means);
    }

    let total = t - t_avg_start;
    let mut exponents = [0.0; 4];
    for i in 0..4 {
        exponents[i] = accum[i] / total;
    }
    exponents.sort_by(|a, b| b.partial_cmp(a).unwrap());

    // Settling check on the running-mean tail.
    let tail_len = ((running.len() as f64) * cfg.convergence_tail).ceil() as usize;
    let tail = &running[running.len().saturating_sub(tail_len.max(2))..];
    let mut tail_dispersion = 0.0_f64;
    for i in 0..4 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for m in tail {
            lo = lo.min(m[i]);
            hi = hi.max(m[i]);
        }
        tail_dispersion = tail_dispersion.max(hi - lo);
    }
    let converged = tail_dispersion <= cfg.convergence_threshold;

    let classification = classify(exponents, cfg.zero_tolerance);
    let class = if converged {
        classification.class
    } else {
        AttractorClass::Unclassified
    };

    let history = cfg.record_history.then(|| {
        let stride = (running.len() / HISTORY_POINTS).max(1);
        running
            .iter()
            .enumerate()
            .filter(|(i, _)| i % stride == 0 || *i + 1 == running.len())
            .map(|(i, m)| (t_avg_start + (i as f64 + 1.0) * steps_per_renorm as f64 * cfg.dt, *m))
            .collect()
    });

    Ok(LyapunovSpectrum {
        exponents,
        zero_tolerance: cfg.zero_tolerance,
        classification: class,
        pattern: classification.pattern,
        hausdorff_label: classification.hausdorff_label,
        kaplan_yorke: classification.kaplan_yorke,
        trace_average: trace_integral / total,
        tail_dispersion,
        converged,
        averaging_time,
        history,
    })
}

fn clamp(s: &mut State, t: f64) -> Result<(), LyapunovError> {
    for i in 0..4 {
        let v = s.0[i];
        if !v.is_finite() {
            return Err(LyapunovError::NonFinite { t });
        }
        if v < 0.0 {
            if v >= -CLAMP_TOLERANCE {
                s.0[i] = 0.0;
            } else {
                return Err(LyapunovError::NegativeState {
                    t,
                    component: COMPONENT_NAMES[i],
                    value: v,
                });
            }
        } else if v < STATE_FLOOR && v > 0.0 {
            // Extinct compartment; see STATE_FLOOR.
            s.0[i] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn classify_limit_cycle_pattern() {
        let c = classify([0.0, -0.0022, -0.013, -0.029], 2e-3);
        assert_eq!(c.class, AttractorClass::LimitCycle);
        assert_eq!(c.hausdorff_label, 1);
        assert_eq!(c.pattern, "0,-,-,-");
        assert!(c.kaplan_yorke.is_none());
    }

    #[test]
    fn classify_two_zero_torus_pattern() {
        let c = classify([0.0, 0.0, -0.011, -0.016], 2e-3);
        assert_eq!(c.class, AttractorClass::QuasiPeriodic2);
        assert!(c.class.is_quasi_periodic());
        assert_eq!(c.hausdorff_label, 2);
    }

    #[test]
    fn classify_all_negative_fixed_point() {
        let c = classify([-0.01, -0.02, -0.03, -0.04], 2e-3);
        assert_eq!(c.class, AttractorClass::FixedPoint);
        assert_eq!(c.hausdorff_label, 0);
    }

    #[test]
    fn classify_chaos_with_kaplan_yorke() {
        let c = classify([0.05, 0.0, -0.1, -0.2], 1e-3);
        assert_eq!(c.class, AttractorClass::Chaos);
        assert_eq!(c.hausdorff_label, 2);
        let ky = c.kaplan_yorke.unwrap();
        assert_abs_diff_eq!(ky, 2.0 + 0.05 / 0.1, epsilon = 1e-12);
    }

    #[test]
    fn classify_handles_unsorted_input() {
        let c = classify([-0.029, 0.0, -0.013, -0.0022], 2e-3);
        assert_eq!(c.class, AttractorClass::LimitCycle);
    }

    #[test]
    fn ambiguous_pattern_is_unclassified() {
        // Positive exponent with no zero anywhere: not a valid flow pattern.
        let c = classify([0.05, -0.01, -0.1, -0.2], 1e-3);
        assert_eq!(c.class, AttractorClass::Unclassified);
    }

    #[test]
    fn linear_sink_spectrum_matches_eigenvalues() {
        // Decoupled dx_i/dt = -a_i x_i: exponents are exactly the -a_i.
        let rates = [0.013, 0.027, 0.041, 0.055];
        let f = move |s: &State| {
            State([
                -rates[0] * s.0[0],
                -rates[1] * s.0[1],
                -rates[2] * s.0[2],
                -rates[3] * s.0[3],
            ])
        };
        let jac = move |_: &State| {
            Matrix4::from_diagonal(&Vector4::new(-rates[0], -rates[1], -rates[2], -rates[3]))
        };
        let trace = move |_: &State| -rates.iter().sum::<f64>();
        let cfg = LyapunovConfig {
            transient: 10.0,
            total_time: 1e4,
            ..LyapunovConfig::default()
        };
        let spec = spectrum_for(&f, &jac, &trace, State::new(0.5, 0.5, 0.5, 0.5), &cfg).unwrap();
        let mut expected = [-rates[0], -rates[1], -rates[2], -rates[3]];
        expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for i in 0..4 {
            assert_abs_diff_eq!(spec.exponents[i], expected[i], epsilon = 1e-9);
        }
        assert_eq!(spec.classification, AttractorClass::FixedPoint);
        assert!(spec.converged);
        assert_abs_diff_eq!(spec.sum(), spec.trace_average, epsilon = 1e-9);
    }

    #[test]
    fn rejects_short_averaging_time() {
        let cfg = LyapunovConfig {
            total_time: 500.0,
            ..LyapunovConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sorted_output_is_a_permutation_of_accumulators() {
        // Sorting must not lose exponents: sums agree.
        let c = classify([0.2, -0.5, 0.1, -0.3], 1e-6);
        assert_eq!(c.class, AttractorClass::Unclassified);
        let spec_sum: f64 = [0.2, -0.5, 0.1, -0.3].iter().sum();
        let mut sorted = [0.2, -0.5, 0.1, -0.3];
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_abs_diff_eq!(sorted.iter().sum::<f64>(), spec_sum, epsilon = 1e-15);
    }
}
