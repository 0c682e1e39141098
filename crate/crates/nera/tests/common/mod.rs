//! Shared oracles and generators for the integration test suites.

use nalgebra::Matrix4;
use rand::Rng;

use nera::model::{vector_field, ModelVariant, State};
use nera::params::ParameterSet;

/// Central finite differences of the vector field: an oracle for the
/// analytic Jacobian that never touches its code path.
pub fn finite_difference_jacobian(p: &ParameterSet, s: State, v: ModelVariant) -> Matrix4<f64> {
    let mut j = Matrix4::zeros();
    for col in 0..4 {
        let h = 1e-6 * s.0[col].abs().max(1.0);
        let mut plus = s;
        let mut minus = s;
        plus.0[col] += h;
        minus.0[col] -= h;
        let fp = vector_field(p, plus, v);
        let fm = vector_field(p, minus, v);
        for row in 0..4 {
            j[(row, col)] = (fp.0[row] - fm.0[row]) / (2.0 * h);
        }
    }
    j
}

/// Max-norm relative disagreement between two matrices.
pub fn matrix_rel_error(a: &Matrix4<f64>, b: &Matrix4<f64>) -> f64 {
    let scale = a.iter().fold(0.0_f64, |m, &x| m.max(x.abs())).max(1e-12);
    let diff = (a - b).iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    diff / scale
}

/// Random parameter set with every rate in `(0.01, 1]` and h in `(0.1, 1]`.
pub fn random_params(rng: &mut impl Rng) -> ParameterSet {
    ParameterSet {
        beta1: rng.random_range(0.01..=1.0),
        beta2: rng.random_range(0.01..=1.0),
        beta3: rng.random_range(0.01..=1.0),
        beta4: rng.random_range(0.01..=1.0),
        r1: rng.random_range(0.01..=1.0),
        r2: rng.random_range(0.01..=1.0),
        r3: rng.random_range(0.01..=1.0),
        alpha1: rng.random_range(0.01..=1.0),
        alpha2: rng.random_range(0.01..=1.0),
        gamma1: rng.random_range(0.01..=1.0),
        h: rng.random_range(0.1..=1.0),
    }
}

/// Random interior state with components in `(0.01, 1)`.
pub fn random_interior_state(rng: &mut impl Rng) -> State {
    State([
        rng.random_range(0.01..1.0),
        rng.random_range(0.01..1.0),
        rng.random_range(0.01..1.0),
        rng.random_range(0.01..1.0),
    ])
}
