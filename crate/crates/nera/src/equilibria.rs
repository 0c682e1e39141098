//! Fixed points of the model: four closed-form points plus numeric search.
//!
//! Closed forms:
//!
//! * `O  = (0, 0, 0, 0)` — total extinction.
//! * `I1 = (1, 0, 0, 0)` — drug-free population at carrying capacity.
//! * `I2 = (beta2*h/(r1-beta2), beta1*h*(r1-beta2*(1+h))/(r1-beta2)^2, 0, 0)`
//!   — non-users coexisting with experimental users only. Positive iff
//!   `r1 - beta2 > 0` and `r1 - beta2*(1+h) > 0`.
//! * `J2 = (beta4*h/(alpha1-beta4), 0, 0, A*)` — non-users coexisting with
//!   addicts only. Positive iff `alpha1 - beta4 > 0` and
//!   `alpha1 - beta4*(1+h) > 0`.
//!
//! The `J2` A-component appears in the literature with two denominator
//! variants, `(alpha1+beta4)^2` and `(alpha1-beta4)^2`. Only one of them can
//! actually zero the vector field; both are evaluated here and the one with
//! the smaller residual wins, with the outcome recorded on the report.
//!
//! A fifth interior point `I3 = (N*, E*, R*, 0)` has no tractable closed form
//! and is found by damped Newton iteration on the A = 0 subsystem.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{jacobian, vector_field, ModelVariant, State};
use crate::params::ParameterSet;

/// Residual bound below which a fixed-point report counts as converged.
pub const CONVERGED_RESIDUAL: f64 = 1e-10;

/// Pairwise max-norm distance below which two equilibria are duplicates.
pub const DEDUP_TOLERANCE: f64 = 1e-6;

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TARGET: f64 = 1e-14;
const NEWTON_MAX_HALVINGS: usize = 20;

// Components this close to zero are snapped to exactly zero in final
// reports, so feasibility is a clean sign test.
const ZERO_SNAP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EquilibriumLabel {
    O,
    I1,
    I2,
    J2,
    I3,
    Numeric,
}

impl EquilibriumLabel {
    pub fn name(&self) -> &'static str {
        match self {
            EquilibriumLabel::O => "O",
            EquilibriumLabel::I1 => "I1",
            EquilibriumLabel::I2 => "I2",
            EquilibriumLabel::J2 => "J2",
            EquilibriumLabel::I3 => "I3",
            EquilibriumLabel::Numeric => "numeric",
        }
    }
}

impl std::str::FromStr for EquilibriumLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "O" | "o" => Ok(EquilibriumLabel::O),
            "I1" | "i1" => Ok(EquilibriumLabel::I1),
            "I2" | "i2" => Ok(EquilibriumLabel::I2),
            "J2" | "j2" => Ok(EquilibriumLabel::J2),
            "I3" | "i3" => Ok(EquilibriumLabel::I3),
            other => Err(format!("unknown equilibrium label `{other}` (O|I1|I2|J2|I3)")),
        }
    }
}

/// One named positivity inequality with its evaluated margin.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionCheck {
    pub name: String,
    pub margin: f64,
    pub pass: bool,
}

impl ConditionCheck {
    fn new(name: impl Into<String>, margin: f64) -> Self {
        ConditionCheck {
            name: name.into(),
            margin,
            pass: margin > 0.0,
        }
    }
}

/// A fixed point candidate with its diagnostics.
#[derive(Clone, Debug)]
pub struct EquilibriumReport {
    pub label: EquilibriumLabel,
    pub state: State,
    /// Max-norm of the vector field at `state`.
    pub residual: f64,
    pub converged: bool,
    /// All components real and nonnegative.
    pub feasible: bool,
    pub conditions: Vec<ConditionCheck>,
    pub iterations: usize,
    pub note: Option<String>,
}

impl EquilibriumReport {
    fn from_state(label: EquilibriumLabel, p: &ParameterSet, state: State) -> Self {
        let state = snap_zeros(state);
        let residual = residual_max(p, state);
        EquilibriumReport {
            label,
            state,
            residual,
            converged: residual < CONVERGED_RESIDUAL,
            feasible: state.is_finite() && state.in_nonnegative_cone(),
            conditions: Vec::new(),
            iterations: 0,
            note: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum NewtonError {
    #[error("singular Jacobian after {iterations} iterations at state {last_state}")]
    SingularJacobian {
        iterations: usize,
        last_state: State,
    },
    #[error("seed must have A = 0 and positive N, E, R components, got {seed}")]
    BadSeed { seed: State },
}

fn snap_zeros(mut s: State) -> State {
    for x in s.0.iter_mut() {
        if x.abs() <= ZERO_SNAP {
            *x = 0.0;
        }
    }
    s
}

/// Max-norm of the full vector field at `s`.
pub fn residual_max(p: &ParameterSet, s: State) -> f64 {
    vector_field(p, s, ModelVariant::Full).max_abs()
}

fn i2_conditions(p: &ParameterSet) -> Vec<ConditionCheck> {
    vec![
        ConditionCheck::new("r1 - beta2 > 0", p.r1 - p.beta2),
        ConditionCheck::new("r1 - beta2*(1+h) > 0", p.r1 - p.beta2 * (1.0 + p.h)),
    ]
}

fn j2_conditions(p: &ParameterSet) -> Vec<ConditionCheck> {
    vec![
        ConditionCheck::new("alpha1 - beta4 > 0", p.alpha1 - p.beta4),
        ConditionCheck::new("alpha1 - beta4*(1+h) > 0", p.alpha1 - p.beta4 * (1.0 + p.h)),
    ]
}

/// The four closed-form fixed points `O`, `I1`, `I2`, `J2`.
///
/// `I2`/`J2` are marked infeasible (not an error) when their defining
/// denominator is singular.
pub fn closed_form_equilibria(p: &ParameterSet) -> Vec<EquilibriumReport> {
    let mut out = Vec::with_capacity(4);

    out.push(EquilibriumReport::from_state(
        EquilibriumLabel::O,
        p,
        State::ZERO,
    ));
    out.push(EquilibriumReport::from_state(
        EquilibriumLabel::I1,
        p,
        State::new(1.0, 0.0, 0.0, 0.0),
    ));

    // I2: E-users prey on N only.
    let d2 = p.r1 - p.beta2;
    let mut i2 = if d2 != 0.0 {
        let n = p.beta2 * p.h / d2;
        let e = p.beta1 * p.h * (p.r1 - p.beta2 * (1.0 + p.h)) / (d2 * d2);
        EquilibriumReport::from_state(EquilibriumLabel::I2, p, State::new(n, e, 0.0, 0.0))
    } else {
        singular_report(EquilibriumLabel::I2, "r1 - beta2 = 0 makes I2 singular")
    };
    i2.conditions = i2_conditions(p);
    out.push(i2);

    // J2: addicts prey on N only. Two published denominator variants for the
    // A component; keep the one that actually annihilates the vector field.
    let d4 = p.alpha1 - p.beta4;
    let mut j2 = if d4 != 0.0 {
        let n = p.beta4 * p.h / d4;
        let numer = p.beta1 * p.h * (p.alpha1 - p.beta4 * (1.0 + p.h));
        let sum = p.alpha1 + p.beta4;
        let a_diff = numer / (d4 * d4);
        let a_sum = numer / (sum * sum);
        let r_diff = residual_max(p, State::new(n, 0.0, 0.0, a_diff));
        let r_sum = residual_max(p, State::new(n, 0.0, 0.0, a_sum));
        let (a, note) = if r_diff <= r_sum {
            (
                a_diff,
                format!(
                    "A uses (alpha1-beta4)^2 denominator (residual {r_diff:.2e}); \
                     (alpha1+beta4)^2 variant rejected (residual {r_sum:.2e})"
                ),
            )
        } else {
            (
                a_sum,
                format!(
                    "A uses (alpha1+beta4)^2 denominator (residual {r_sum:.2e}); \
                     (alpha1-beta4)^2 variant rejected (residual {r_diff:.2e})"
                ),
            )
        };
        let mut rep =
            EquilibriumReport::from_state(EquilibriumLabel::J2, p, State::new(n, 0.0, 0.0, a));
        rep.note = Some(note);
        rep
    } else {
        singular_report(EquilibriumLabel::J2, "alpha1 - beta4 = 0 makes J2 singular")
    };
    j2.conditions = j2_conditions(p);
    out.push(j2);

    out
}

fn singular_report(label: EquilibriumLabel, note: &str) -> EquilibriumReport {
    EquilibriumReport {
        label,
        state: State([f64::NAN; 4]),
        residual: f64::NAN,
        converged: false,
        feasible: false,
        conditions: Vec::new(),
        iterations: 0,
        note: Some(note.to_string()),
    }
}

// Damped Newton on the components listed in `active` (the rest stay fixed).
// Returns (state, iterations, converged).
fn newton(
    p: &ParameterSet,
    mut x: State,
    active: &[usize],
) -> Result<(State, usize, bool), NewtonError> {
    let mut res = residual_active(p, x, active);
    for iter in 0..NEWTON_MAX_ITER {
        if res < NEWTON_TARGET {
            return Ok((x, iter, true));
        }
        let step = match newton_step(p, x, active) {
            Some(s) => s,
            None => {
                return Err(NewtonError::SingularJacobian {
                    iterations: iter,
                    last_state: x,
                })
            }
        };
        // Halve the step while the residual gets worse.
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let mut trial = x;
            for (k, &i) in active.iter().enumerate() {
                trial.0[i] -= scale * step[k];
            }
            let trial_res = residual_active(p, trial, active);
            if trial_res.is_finite() && trial_res < res {
                accepted = Some((trial, trial_res));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((trial, trial_res)) => {
                x = trial;
                res = trial_res;
            }
            // No descent direction left; report what we have.
            None => return Ok((x, iter, res < NEWTON_TARGET)),
        }
    }
    Ok((x, NEWTON_MAX_ITER, res < NEWTON_TARGET))
}

fn residual_active(p: &ParameterSet, s: State, active: &[usize]) -> f64 {
    let f = vector_field(p, s, ModelVariant::Full);
    active
        .iter()
        .fold(0.0_f64, |m, &i| m.max(f.0[i].abs()))
}

fn newton_step(p: &ParameterSet, x: State, active: &[usize]) -> Option<Vec<f64>> {
    let f = vector_field(p, x, ModelVariant::Full);
    let j = jacobian(p, x, ModelVariant::Full);
    match active.len() {
        3 => {
            let mut m = Matrix3::zeros();
            let mut b = Vector3::zeros();
            for (r, &i) in active.iter().enumerate() {
                b[r] = f.0[i];
                for (c, &k) in active.iter().enumerate() {
                    m[(r, c)] = j[(i, k)];
                }
            }
            let sol = m.lu().solve(&b)?;
            Some(sol.iter().copied().collect())
        }
        4 => {
            let b = Vector4::from_column_slice(&f.0);
            let m: Matrix4<f64> = j;
            let sol = m.lu().solve(&b)?;
            Some(sol.iter().copied().collect())
        }
        _ => unreachable!("active set is 3 or 4 components"),
    }
}

/// Newton search for the interior `I3 = (N*, E*, R*, 0)` point on the
/// `A = 0` subsystem.
///
/// Returns a converged report (residual under [`CONVERGED_RESIDUAL`]) or a
/// non-convergence report after 100 iterations; a singular Jacobian is the
/// only error.
pub fn find_i3(p: &ParameterSet, seed: State) -> Result<EquilibriumReport, NewtonError> {
    if seed.a() != 0.0 || !(seed.n() > 0.0 && seed.e() > 0.0 && seed.r() > 0.0) {
        return Err(NewtonError::BadSeed { seed });
    }
    let (state, iterations, _) = newton(p, seed, &[0, 1, 2])?;
    let mut rep = EquilibriumReport::from_state(classify_label(p, state), p, state);
    rep.iterations = iterations;
    Ok(rep)
}

fn classify_label(p: &ParameterSet, s: State) -> EquilibriumLabel {
    let closed = [
        (EquilibriumLabel::O, State::ZERO),
        (EquilibriumLabel::I1, State::new(1.0, 0.0, 0.0, 0.0)),
    ];
    for (label, t) in closed {
        if s.distance_max(&t) < DEDUP_TOLERANCE {
            return label;
        }
    }
    for rep in closed_form_equilibria(p) {
        if rep.state.is_finite() && s.distance_max(&rep.state) < DEDUP_TOLERANCE {
            return rep.label;
        }
    }
    if s.a() == 0.0 && s.n() > DEDUP_TOLERANCE && s.e() > DEDUP_TOLERANCE && s.r() > DEDUP_TOLERANCE
    {
        return EquilibriumLabel::I3;
    }
    EquilibriumLabel::Numeric
}

/// Seed grid for the exhaustive numeric search.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SeedGrid {
    pub points_per_axis: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for SeedGrid {
    fn default() -> Self {
        SeedGrid {
            points_per_axis: 5,
            lo: 0.0,
            hi: 1.0,
        }
    }
}

/// Result of [`find_all_numeric`]: deduplicated converged equilibria plus a
/// count of seeds that failed to converge.
#[derive(Clone, Debug)]
pub struct NumericSearch {
    pub reports: Vec<EquilibriumReport>,
    pub failed_seeds: usize,
}

/// Full 4D Newton from every grid seed; converged results are deduplicated
/// (pairwise max-norm distance above [`DEDUP_TOLERANCE`]) and sorted
/// lexicographically by state so the output order is reproducible.
pub fn find_all_numeric(p: &ParameterSet, grid: SeedGrid) -> NumericSearch {
    let k = grid.points_per_axis.max(2);
    let coord = |i: usize| grid.lo + (grid.hi - grid.lo) * (i as f64) / ((k - 1) as f64);
    let mut seeds = Vec::with_capacity(k * k * k * k);
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                for m in 0..k {
                    seeds.push(State::new(coord(i), coord(j), coord(l), coord(m)));
                }
            }
        }
    }

    let solved: Vec<Option<State>> = seeds
        .par_iter()
        .map(|&seed| match newton(p, seed, &[0, 1, 2, 3]) {
            Ok((state, _, true)) if state.is_finite() => Some(snap_zeros(state)),
            _ => None,
        })
        .collect();

    let failed_seeds = solved.iter().filter(|s| s.is_none()).count();
    let mut found: Vec<State> = Vec::new();
    for s in solved.into_iter().flatten() {
        if !found.iter().any(|t| t.distance_max(&s) <= DEDUP_TOLERANCE) {
            found.push(s);
        }
    }
    found.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite states"));

    let reports = found
        .into_iter()
        .map(|s| {
            let mut rep = EquilibriumReport::from_state(classify_label(p, s), p, s);
            match rep.label {
                EquilibriumLabel::I2 => rep.conditions = i2_conditions(p),
                EquilibriumLabel::J2 => rep.conditions = j2_conditions(p),
                _ => {}
            }
            rep
        })
        .collect();

    NumericSearch {
        reports,
        failed_seeds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn trivial_points_have_zero_residual() {
        for p in [ParameterSet::colorado(), ParameterSet::washington()] {
            let reps = closed_form_equilibria(&p);
            assert_eq!(reps[0].label, EquilibriumLabel::O);
            assert_eq!(reps[0].residual, 0.0);
            assert_eq!(reps[1].label, EquilibriumLabel::I1);
            assert_eq!(reps[1].residual, 0.0);
        }
    }

    #[test]
    fn i2_colorado_matches_closed_form() {
        let p = ParameterSet::colorado();
        let reps = closed_form_equilibria(&p);
        let i2 = &reps[2];
        assert_relative_eq!(i2.state.n(), 0.018867924528301886, max_relative = 1e-14);
        assert_relative_eq!(i2.state.e(), 0.048593805624777504, max_relative = 1e-14);
        assert!(i2.residual < CONVERGED_RESIDUAL);
        assert!(i2.feasible);
        assert!(i2.conditions.iter().all(|c| c.pass));
    }

    #[test]
    fn j2_prefers_the_denominator_that_zeroes_the_field() {
        for p in [ParameterSet::colorado(), ParameterSet::washington()] {
            let reps = closed_form_equilibria(&p);
            let j2 = &reps[3];
            let d = p.alpha1 - p.beta4;
            let expected = p.beta1 * p.h * (p.alpha1 - p.beta4 * (1.0 + p.h)) / (d * d);
            assert_relative_eq!(j2.state.a(), expected, max_relative = 1e-13);
            assert!(j2.residual < CONVERGED_RESIDUAL, "residual {}", j2.residual);
            assert!(j2
                .note
                .as_deref()
                .unwrap()
                .starts_with("A uses (alpha1-beta4)^2"));
        }
    }

    #[test]
    fn washington_j2_feasibility_margins() {
        // alpha1 - beta4 = 0.06 and alpha1 - beta4*(1+h) = 0.0405.
        let p = ParameterSet::washington();
        let reps = closed_form_equilibria(&p);
        let j2 = &reps[3];
        assert!(j2.feasible);
        assert_relative_eq!(j2.conditions[0].margin, 0.06, max_relative = 1e-12);
        assert_relative_eq!(j2.conditions[1].margin, 0.0405, max_relative = 1e-12);
        assert!(j2.conditions.iter().all(|c| c.pass));
    }

    #[test]
    fn i2_singular_when_rates_cancel() {
        let mut p = ParameterSet::colorado();
        p.beta2 = p.r1;
        let reps = closed_form_equilibria(&p);
        assert!(!reps[2].feasible);
        assert!(!reps[2].converged);
    }

    #[test]
    fn find_i3_converges_from_generic_seed() {
        let p = ParameterSet::colorado();
        let rep = find_i3(&p, State::new(0.1, 0.1, 0.1, 0.0)).unwrap();
        assert!(rep.converged, "residual {}", rep.residual);
        assert!(rep.residual < CONVERGED_RESIDUAL);
        assert_eq!(rep.state.a(), 0.0);
    }

    #[test]
    fn find_i3_fixed_on_i2() {
        // Seeding exactly on I2 must return I2 (R stays 0).
        let p = ParameterSet::colorado();
        let i2 = closed_form_equilibria(&p)[2].state;
        let seed = State::new(i2.n(), i2.e(), 1e-300, 0.0);
        let rep = find_i3(&p, seed).unwrap();
        assert!(rep.converged);
        assert!(rep.state.distance_max(&i2) < 1e-9);
    }

    #[test]
    fn find_i3_rejects_bad_seed() {
        let p = ParameterSet::colorado();
        assert!(find_i3(&p, State::new(0.1, 0.1, 0.1, 0.2)).is_err());
        assert!(find_i3(&p, State::new(0.1, 0.0, 0.1, 0.0)).is_err());
    }

    #[test]
    fn vanishing_r2_forces_the_i2_branch() {
        let mut p = ParameterSet::colorado();
        p.r2 = 1e-9;
        let i2 = closed_form_equilibria(&p)[2].state;
        let rep = find_i3(&p, State::new(0.1, 0.1, 0.1, 0.0)).unwrap();
        assert!(rep.converged);
        assert!(
            rep.state.distance_max(&i2) < 1e-8,
            "got {} vs {}",
            rep.state,
            i2
        );
    }

    #[test]
    fn numeric_search_finds_closed_forms() {
        let p = ParameterSet::colorado();
        let search = find_all_numeric(&p, SeedGrid::default());
        let has = |label: EquilibriumLabel| search.reports.iter().any(|r| r.label == label);
        assert!(has(EquilibriumLabel::O));
        assert!(has(EquilibriumLabel::I1));
        assert!(has(EquilibriumLabel::I2));
        assert!(has(EquilibriumLabel::J2));
        for rep in &search.reports {
            assert!(rep.residual < CONVERGED_RESIDUAL);
        }
        // Dedup: all pairwise distances above the tolerance.
        for (i, a) in search.reports.iter().enumerate() {
            for b in search.reports.iter().skip(i + 1) {
                assert!(a.state.distance_max(&b.state) > DEDUP_TOLERANCE);
            }
        }
    }

    #[test]
    fn closed_forms_are_newton_fixed_points() {
        // Self-consistency: refining I2/J2 from their own closed-form values
        // must not move them.
        for p in [ParameterSet::colorado(), ParameterSet::washington()] {
            for rep in closed_form_equilibria(&p) {
                if !rep.feasible || !rep.converged {
                    continue;
                }
                let (refined, _, _) = newton(&p, rep.state, &[0, 1, 2, 3]).unwrap();
                assert!(
                    refined.distance_max(&rep.state) < 1e-12,
                    "{:?} moved by {}",
                    rep.label,
                    refined.distance_max(&rep.state)
                );
            }
        }
    }
}
