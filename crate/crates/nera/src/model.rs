//! The four-compartment predator-prey vector field and its analytic Jacobian.
//!
//! The population is split into non-users (N), experimental users (E),
//! recreational users (R) and addicts (A), each a dimensionless fraction.
//! N plays the role of prey: it grows logistically with rate `beta1` and is
//! consumed by the user groups through saturating Holling type II responses
//! with a shared half-saturation `h`. Each user group decays at its own
//! abandon rate `beta2..beta4`.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::ParameterSet;

/// Population fractions `(N, E, R, A)`, stored in that order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct State(pub [f64; 4]);

/// Column names matching the `State` component order.
pub const COMPONENT_NAMES: [&str; 4] = ["N", "E", "R", "A"];

impl State {
    pub const ZERO: State = State([0.0; 4]);

    pub fn new(n: f64, e: f64, r: f64, a: f64) -> Self {
        State([n, e, r, a])
    }

    pub fn n(&self) -> f64 {
        self.0[0]
    }

    pub fn e(&self) -> f64 {
        self.0[1]
    }

    pub fn r(&self) -> f64 {
        self.0[2]
    }

    pub fn a(&self) -> f64 {
        self.0[3]
    }

    /// True when every component is `>= 0` (the model's state space).
    pub fn in_nonnegative_cone(&self) -> bool {
        self.0.iter().all(|&x| x >= 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
    }

    /// Max-norm distance to another state.
    pub fn distance_max(&self, other: &State) -> f64 {
        (0..4).fold(0.0_f64, |m, i| m.max((self.0[i] - other.0[i]).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl std::fmt::Display for State {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "(N={}, E={}, R={}, A={})",
            self.0[0], self.0[1], self.0[2], self.0[3]
        )
    }
}

/// Which set of equations to evaluate.
///
/// `Reduced` is the weak-coupling form obtained by dropping the influence of
/// A on N and E and of R on N (`alpha1`, `alpha2`, `gamma1` all zero). It is
/// implemented as its own expression so that the identity
/// `reduced(p) == full(p with alpha1=alpha2=gamma1=0)` is a meaningful
/// cross-check of both transcriptions rather than a tautology.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelVariant {
    Full,
    Reduced,
}

impl ModelVariant {
    pub fn name(&self) -> &'static str {
        match self {
            ModelVariant::Full => "full",
            ModelVariant::Reduced => "reduced",
        }
    }
}

impl std::str::FromStr for ModelVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(ModelVariant::Full),
            "reduced" => Ok(ModelVariant::Reduced),
            other => Err(format!("unknown model variant `{other}` (full|reduced)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("holling response domain: x = {x}, h = {h} (requires x >= 0 and h > 0)")]
    HollingDomain { x: f64, h: f64 },
}

/// Holling type II saturating response `x / (h + x)`.
///
/// `h` is the half-saturation: the prey density at which the response reaches
/// half of its asymptotic maximum. Strictly increasing in `x`, tends to 1 as
/// `x -> inf`.
pub fn holling2(x: f64, h: f64) -> Result<f64, ModelError> {
    if !(x >= 0.0) || !(h > 0.0) {
        return Err(ModelError::HollingDomain { x, h });
    }
    Ok(x / (h + x))
}

// Unchecked response and its derivative, used inside the vector field where
// Runge-Kutta stage states may undershoot zero by rounding. Well defined for
// x > -h.
#[inline]
fn sat(x: f64, h: f64) -> f64 {
    x / (h + x)
}

#[inline]
fn sat_deriv(x: f64, h: f64) -> f64 {
    let d = h + x;
    h / (d * d)
}

/// Time derivatives `(dN/dt, dE/dt, dR/dt, dA/dt)` at `s`.
pub fn vector_field(p: &ParameterSet, s: State, variant: ModelVariant) -> State {
    let [n, e, r, a] = s.0;
    let h = p.h;
    let p1 = sat(n, h);
    let p2 = sat(e, h);
    let p3 = sat(r, h);
    match variant {
        ModelVariant::Full => State([
            p.beta1 * n * (1.0 - n) - p.r1 * p1 * e - p.alpha1 * p1 * a - p.alpha2 * p1 * r,
            p.r1 * p1 * e - p.r2 * p2 * r - p.beta2 * e - p.gamma1 * p2 * a,
            p.r2 * p2 * r - p.beta3 * r - p.r3 * p3 * a + p.alpha2 * p1 * r,
            p.r3 * p3 * a - p.beta4 * a + p.alpha1 * p1 * a + p.gamma1 * p2 * a,
        ]),
        ModelVariant::Reduced => State([
            p.beta1 * n * (1.0 - n) - p.r1 * p1 * e,
            p.r1 * p1 * e - p.r2 * p2 * r - p.beta2 * e,
            p.r2 * p2 * r - p.beta3 * r - p.r3 * p3 * a,
            p.r3 * p3 * a - p.beta4 * a,
        ]),
    }
}

/// Analytic Jacobian of [`vector_field`] at `s`.
///
/// The entries are the exact partial derivatives of the implemented
/// equations; unit and acceptance tests pin them against central finite
/// differences of the vector field.
pub fn jacobian(p: &ParameterSet, s: State, variant: ModelVariant) -> Matrix4<f64> {
    let [n, e, r, a] = s.0;
    let h = p.h;
    let p1 = sat(n, h);
    let p2 = sat(e, h);
    let p3 = sat(r, h);
    let dp1 = sat_deriv(n, h);
    let dp2 = sat_deriv(e, h);
    let dp3 = sat_deriv(r, h);

    let (alpha1, alpha2, gamma1) = match variant {
        ModelVariant::Full => (p.alpha1, p.alpha2, p.gamma1),
        ModelVariant::Reduced => (0.0, 0.0, 0.0),
    };

    let j11 = p.beta1 * (1.0 - 2.0 * n) - (p.r1 * e + alpha1 * a + alpha2 * r) * dp1;
    let j22 = -p.beta2 + p.r1 * p1 - (p.r2 * r + gamma1 * a) * dp2;
    let j33 = -p.beta3 + p.r2 * p2 + alpha2 * p1 - p.r3 * a * dp3;
    let j44 = -p.beta4 + p.r3 * p3 + alpha1 * p1 + gamma1 * p2;

    Matrix4::new(
        j11,
        -p.r1 * p1,
        -alpha2 * p1,
        -alpha1 * p1,
        p.r1 * e * dp1,
        j22,
        -p.r2 * p2,
        -gamma1 * p2,
        alpha2 * r * dp1,
        p.r2 * r * dp2,
        j33,
        -p.r3 * p3,
        alpha1 * a * dp1,
        gamma1 * a * dp2,
        p.r3 * a * dp3,
        j44,
    )
}

/// Trace of the Jacobian at `s`, without building the matrix.
///
/// Used by the Lyapunov sum rule, which compares the time average of this
/// quantity along a trajectory against the sum of the computed exponents.
pub fn jacobian_trace(p: &ParameterSet, s: State, variant: ModelVariant) -> f64 {
    let [n, e, r, a] = s.0;
    let h = p.h;
    let (alpha1, alpha2, gamma1) = match variant {
        ModelVariant::Full => (p.alpha1, p.alpha2, p.gamma1),
        ModelVariant::Reduced => (0.0, 0.0, 0.0),
    };
    let j11 = p.beta1 * (1.0 - 2.0 * n) - (p.r1 * e + alpha1 * a + alpha2 * r) * sat_deriv(n, h);
    let j22 = -p.beta2 + p.r1 * sat(n, h) - (p.r2 * r + gamma1 * a) * sat_deriv(e, h);
    let j33 = -p.beta3 + p.r2 * sat(e, h) + alpha2 * sat(n, h) - p.r3 * a * sat_deriv(r, h);
    let j44 = -p.beta4 + p.r3 * sat(r, h) + alpha1 * sat(n, h) + gamma1 * sat(e, h);
    j11 + j22 + j33 + j44
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn holling_zero_prey_zero_response() {
        assert_eq!(holling2(0.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn holling_half_saturation() {
        // At x = h the response is exactly half its maximum.
        assert_eq!(holling2(0.5, 0.5).unwrap(), 0.5);
    }

    #[test]
    fn holling_direct_arithmetic() {
        // 1.5 / (0.5 + 1.5), checked against an independent scalar evaluation.
        assert_eq!(holling2(1.5, 0.5).unwrap(), 0.75);
    }

    #[test]
    fn holling_rejects_bad_domain() {
        assert!(holling2(-0.1, 0.5).is_err());
        assert!(holling2(0.1, 0.0).is_err());
        assert!(holling2(0.1, -1.0).is_err());
        assert!(holling2(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn origin_is_fixed_point() {
        let p = ParameterSet::colorado();
        for v in [ModelVariant::Full, ModelVariant::Reduced] {
            assert_eq!(vector_field(&p, State::ZERO, v).0, [0.0; 4]);
        }
    }

    #[test]
    fn drug_free_state_is_fixed_point() {
        let p = ParameterSet::washington();
        let s = State::new(1.0, 0.0, 0.0, 0.0);
        for v in [ModelVariant::Full, ModelVariant::Reduced] {
            assert_eq!(vector_field(&p, s, v).0, [0.0; 4]);
        }
    }

    #[test]
    fn field_matches_independent_transcription() {
        // Frozen output of a straight-line transcription of the equations,
        // evaluated in f64 in a separate environment.
        let p = ParameterSet::colorado();
        let d = vector_field(&p, State::new(0.5, 0.1, 0.05, 0.01), ModelVariant::Full);
        let expected = [
            -0.013090000000000001,
            0.018740000000000003,
            5.6969696969697264e-05,
            0.00012303030303030302,
        ];
        for i in 0..4 {
            assert_relative_eq!(d.0[i], expected[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn each_compartment_derivative_vanishes_at_its_own_zero() {
        // Forward invariance of the nonnegative cone: with one component at
        // zero, that component's derivative is exactly zero.
        let p = ParameterSet::colorado();
        for v in [ModelVariant::Full, ModelVariant::Reduced] {
            for i in 0..4 {
                let mut s = State::new(0.3, 0.2, 0.15, 0.25);
                s.0[i] = 0.0;
                let d = vector_field(&p, s, v);
                assert_eq!(d.0[i], 0.0, "component {i} under {v:?}");
            }
        }
    }

    #[test]
    fn jacobian_at_origin_is_diagonal() {
        let p = ParameterSet::colorado();
        let j = jacobian(&p, State::ZERO, ModelVariant::Full);
        let expected = Matrix4::from_diagonal(&nalgebra::Vector4::new(
            p.beta1, -p.beta2, -p.beta3, -p.beta4,
        ));
        assert_eq!(j, expected);
    }

    #[test]
    fn jacobian_at_drug_free_state() {
        // The matrix is upper triangular there; its diagonal carries the
        // closed-form eigenvalues.
        let p = ParameterSet::colorado();
        let j = jacobian(&p, State::new(1.0, 0.0, 0.0, 0.0), ModelVariant::Full);
        let hp1 = p.h + 1.0;
        assert_relative_eq!(j[(0, 0)], -p.beta1, max_relative = 1e-15);
        assert_relative_eq!(j[(1, 1)], -p.beta2 + p.r1 / hp1, max_relative = 1e-15);
        assert_relative_eq!(j[(2, 2)], -p.beta3 + p.alpha2 / hp1, max_relative = 1e-15);
        assert_relative_eq!(j[(3, 3)], -p.beta4 + p.alpha1 / hp1, max_relative = 1e-15);
        for row in 1..4 {
            for col in 0..row {
                assert_eq!(j[(row, col)], 0.0);
            }
        }
    }

    #[test]
    fn jacobian_boundary_identities() {
        // p_i(0) = 0, p_i'(0) = 1/h, p_i(1) = 1/(h+1), p_i'(1) = h/(h+1)^2.
        let h = 0.5;
        assert_eq!(sat(0.0, h), 0.0);
        assert_eq!(sat_deriv(0.0, h), 1.0 / h);
        assert_relative_eq!(sat(1.0, h), 1.0 / (h + 1.0), max_relative = 1e-15);
        assert_relative_eq!(
            sat_deriv(1.0, h),
            h / ((h + 1.0) * (h + 1.0)),
            max_relative = 1e-15
        );
    }

    #[test]
    fn trace_matches_matrix_trace() {
        let p = ParameterSet::washington();
        let s = State::new(0.4, 0.2, 0.1, 0.05);
        for v in [ModelVariant::Full, ModelVariant::Reduced] {
            assert_relative_eq!(
                jacobian_trace(&p, s, v),
                jacobian(&p, s, v).trace(),
                max_relative = 1e-14
            );
        }
    }
}
