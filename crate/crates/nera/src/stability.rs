//! Eigenvalues at equilibria and linear stability classification.

use nalgebra::{Complex, Schur};
use serde::Serialize;
use thiserror::Error;

use crate::equilibria::EquilibriumReport;
use crate::model::{jacobian, ModelVariant};
use crate::params::ParameterSet;

/// Real parts closer to zero than this are treated as marginal: the point
/// sits on (or numerically at) a stability boundary and is never reported as
/// a sink, source or saddle.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;

/// Residual bound required of the equilibrium fed to the eigensolver.
pub const MAX_INPUT_RESIDUAL: f64 = 1e-8;

// Imaginary parts below this (relative to the eigenvalue magnitude) are
// rounding noise from the real Schur form, not genuine complex pairs.
const IMAG_NOISE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StabilityClass {
    Sink,
    Source,
    Saddle,
    SaddleFocus,
    /// At least one eigenvalue has a (numerically) zero real part.
    CenterLike,
}

impl StabilityClass {
    pub fn name(&self) -> &'static str {
        match self {
            StabilityClass::Sink => "sink",
            StabilityClass::Source => "source",
            StabilityClass::Saddle => "saddle",
            StabilityClass::SaddleFocus => "saddle-focus",
            StabilityClass::CenterLike => "center-like",
        }
    }
}

#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub equilibrium: EquilibriumReport,
    /// Sorted by real part descending, ties by imaginary part descending.
    pub eigenvalues: [Complex<f64>; 4],
    pub class: StabilityClass,
    /// Smallest |Re| over the four eigenvalues.
    pub margin: f64,
}

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("equilibrium residual {residual:.3e} exceeds {max:.0e}; refine it first")]
    ResidualTooLarge { residual: f64, max: f64 },
    #[error("dense eigensolver failed to converge")]
    EigenSolverFailed,
}

/// Closed-form eigenvalues at the extinction point `O`:
/// `{beta1, -beta2, -beta3, -beta4}`. The Jacobian is diagonal there.
pub fn analytic_eigenvalues_origin(p: &ParameterSet) -> [f64; 4] {
    [p.beta1, -p.beta2, -p.beta3, -p.beta4]
}

/// Closed-form eigenvalues at the drug-free point `I1 = (1,0,0,0)`:
/// `{-beta1, -beta2 + r1/(h+1), -beta3 + alpha2/(h+1), -beta4 + alpha1/(h+1)}`.
pub fn analytic_eigenvalues_drug_free(p: &ParameterSet) -> [f64; 4] {
    let hp1 = p.h + 1.0;
    [
        -p.beta1,
        -p.beta2 + p.r1 / hp1,
        -p.beta3 + p.alpha2 / hp1,
        -p.beta4 + p.alpha1 / hp1,
    ]
}

/// Deterministic eigenvalue order: real part descending, then imaginary part
/// descending.
pub fn sort_eigenvalues(eigs: &mut [Complex<f64>; 4]) {
    eigs.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
}

/// Eigenvalues of the analytic Jacobian at a computed equilibrium, plus the
/// sign-pattern classification.
pub fn eigenvalues_at(
    p: &ParameterSet,
    e: &EquilibriumReport,
) -> Result<StabilityReport, StabilityError> {
    eigenvalues_at_state(p, e.clone(), ModelVariant::Full)
}

/// Same as [`eigenvalues_at`] but on a chosen model variant.
pub fn eigenvalues_at_state(
    p: &ParameterSet,
    e: EquilibriumReport,
    variant: ModelVariant,
) -> Result<StabilityReport, StabilityError> {
    if !(e.residual < MAX_INPUT_RESIDUAL) {
        return Err(StabilityError::ResidualTooLarge {
            residual: e.residual,
            max: MAX_INPUT_RESIDUAL,
        });
    }
    let j = jacobian(p, e.state, variant);
    let schur = Schur::try_new(j, f64::EPSILON, 100_000)
        .ok_or(StabilityError::EigenSolverFailed)?;
    let raw = schur.complex_eigenvalues();
    let mut eigenvalues = [Complex::new(0.0, 0.0); 4];
    for i in 0..4 {
        eigenvalues[i] = raw[i];
    }
    sort_eigenvalues(&mut eigenvalues);
    let (class, margin) = classify(&eigenvalues, MARGINAL_TOLERANCE);
    Ok(StabilityReport {
        equilibrium: e,
        eigenvalues,
        class,
        margin,
    })
}

/// Classify a sorted eigenvalue quadruple by the signs of its real parts.
pub fn classify(eigs: &[Complex<f64>; 4], marginal_tol: f64) -> (StabilityClass, f64) {
    let margin = eigs.iter().map(|l| l.re.abs()).fold(f64::INFINITY, f64::min);
    if margin < marginal_tol {
        return (StabilityClass::CenterLike, margin);
    }
    let n_pos = eigs.iter().filter(|l| l.re > 0.0).count();
    if n_pos == 4 {
        return (StabilityClass::Source, margin);
    }
    if n_pos == 0 {
        return (StabilityClass::Sink, margin);
    }
    // Mixed signs. A saddle-focus has a complex-conjugate pair with positive
    // real part while the remaining eigenvalues are real.
    let scale = eigs.iter().map(|l| l.norm()).fold(1.0_f64, f64::max);
    let is_complex = |l: &Complex<f64>| l.im.abs() > IMAG_NOISE * scale;
    let complex_pos: Vec<&Complex<f64>> = eigs
        .iter()
        .filter(|l| is_complex(l) && l.re > 0.0)
        .collect();
    let rest_real = eigs
        .iter()
        .filter(|l| !(is_complex(l) && l.re > 0.0))
        .all(|l| !is_complex(l));
    if complex_pos.len() == 2 && rest_real {
        (StabilityClass::SaddleFocus, margin)
    } else {
        (StabilityClass::Saddle, margin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::closed_form_equilibria;
    use approx::assert_relative_eq;

    fn report_for(p: &ParameterSet, idx: usize) -> StabilityReport {
        let reps = closed_form_equilibria(p);
        eigenvalues_at(p, &reps[idx]).unwrap()
    }

    #[test]
    fn origin_is_a_saddle_with_exact_eigenvalues() {
        let p = ParameterSet::colorado();
        let rep = report_for(&p, 0);
        assert_eq!(rep.class, StabilityClass::Saddle);
        let mut expected = analytic_eigenvalues_origin(&p);
        expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (got, want) in rep.eigenvalues.iter().zip(expected) {
            assert_relative_eq!(got.re, want, epsilon = 1e-14);
            assert_eq!(got.im, 0.0);
        }
    }

    #[test]
    fn drug_free_colorado_eigenvalues() {
        // (-0.042, 0.44/1.5 - 0.016, 0.043/1.5 - 0.052, 0.103/1.5 - 0.047)
        let p = ParameterSet::colorado();
        let rep = report_for(&p, 1);
        assert_eq!(rep.class, StabilityClass::Saddle);
        let mut expected = [
            -0.042,
            0.2773333333333333,
            -0.023333333333333334,
            0.021666666666666667,
        ];
        expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (got, want) in rep.eigenvalues.iter().zip(expected) {
            assert_relative_eq!(got.re, want, epsilon = 1e-12);
            assert!(got.im.abs() < 1e-14);
        }
    }

    #[test]
    fn i2_colorado_is_a_saddle_focus() {
        let p = ParameterSet::colorado();
        let rep = report_for(&p, 2);
        assert_eq!(rep.class, StabilityClass::SaddleFocus);
        let complex: Vec<_> = rep
            .eigenvalues
            .iter()
            .filter(|l| l.im.abs() > 1e-12)
            .collect();
        assert_eq!(complex.len(), 2);
        assert!(complex.iter().all(|l| l.re > 0.0));
    }

    #[test]
    fn eigen_sum_and_product_match_trace_and_determinant() {
        let p = ParameterSet::washington();
        for rep0 in closed_form_equilibria(&p) {
            if !rep0.converged {
                continue;
            }
            let j = crate::model::jacobian(&p, rep0.state, ModelVariant::Full);
            let rep = eigenvalues_at(&p, &rep0).unwrap();
            let sum: Complex<f64> = rep.eigenvalues.iter().sum();
            let prod: Complex<f64> = rep.eigenvalues.iter().product();
            let scale = rep
                .eigenvalues
                .iter()
                .map(|l| l.norm())
                .fold(1e-30, f64::max);
            assert!((sum.re - j.trace()).abs() <= 1e-10 * scale.max(j.trace().abs()));
            let det = j.determinant();
            assert!((prod.re - det).abs() <= 1e-8 * det.abs().max(1e-12));
            assert!(sum.im.abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_unconverged_equilibrium() {
        let p = ParameterSet::colorado();
        let mut rep = closed_form_equilibria(&p)[0].clone();
        rep.residual = 1e-3;
        assert!(matches!(
            eigenvalues_at(&p, &rep),
            Err(StabilityError::ResidualTooLarge { .. })
        ));
    }

    #[test]
    fn marginal_eigenvalue_classifies_center_like() {
        let eigs = [
            Complex::new(1e-12, 0.3),
            Complex::new(1e-12, -0.3),
            Complex::new(-0.1, 0.0),
            Complex::new(-0.2, 0.0),
        ];
        let (class, margin) = classify(&eigs, MARGINAL_TOLERANCE);
        assert_eq!(class, StabilityClass::CenterLike);
        assert!(margin < MARGINAL_TOLERANCE);
    }

    #[test]
    fn negative_pair_with_positive_real_is_a_plain_saddle() {
        let eigs = [
            Complex::new(0.2, 0.0),
            Complex::new(-0.01, 0.4),
            Complex::new(-0.01, -0.4),
            Complex::new(-0.3, 0.0),
        ];
        let (class, _) = classify(&eigs, MARGINAL_TOLERANCE);
        assert_eq!(class, StabilityClass::Saddle);
    }
}
