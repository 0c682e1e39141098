// Scratch probe: basin sensitivity of the borderline points.

use nera::integrate::{integrate, IntegratorConfig, Scheme};
use nera::lyapunov::{lyapunov_spectrum, LyapunovConfig};
use nera::model::{ModelVariant, State};
use nera::params::ParameterSet;

fn spectrum_from(name: &str, p: &ParameterSet, s0: State) {
    let cfg = LyapunovConfig::default();
    let spec = lyapunov_spectrum(p, s0, &cfg).unwrap();
    println!(
        "{name} s0={s0}: [{:+.6}, {:+.6}, {:+.6}, {:+.6}] {}",
        spec.exponents[0],
        spec.exponents[1],
        spec.exponents[2],
        spec.exponents[3],
        spec.classification.name()
    );
}

fn settle(p: &ParameterSet, s0: State, t: f64) -> State {
    let cfg = IntegratorConfig {
        scheme: Scheme::Rk4Fixed,
        dt: 0.01,
        t_end: t,
        transient: 0.0,
        record_stride: 1_000_000,
        ..IntegratorConfig::default()
    };
    integrate(p, s0, &cfg, ModelVariant::Full)
        .unwrap()
        .final_state()
        .unwrap()
        .1
}

fn main() {
    let wa34 = ParameterSet::washington().with_beta1(0.34);
    let wa345 = ParameterSet::washington().with_beta1(0.345);
    let co40 = ParameterSet::colorado().with_beta1(0.40);

    for s0 in [
        State::new(0.8, 0.1, 0.05, 0.05),
        State::new(0.5, 0.3, 0.1, 0.02),
        State::new(0.3, 0.05, 0.2, 0.1),
        State::new(0.9, 0.02, 0.01, 0.002),
    ] {
        spectrum_from("washington 0.34", &wa34, s0);
    }
    // Warm start: settle on the 0.345 torus, then descend to 0.34.
    let torus_state = settle(&wa345, State::new(0.8, 0.1, 0.05, 0.05), 2e4);
    spectrum_from("washington 0.34 (warm from 0.345)", &wa34, torus_state);

    for s0 in [
        State::new(0.8, 0.1, 0.05, 0.05),
        State::new(0.5, 0.3, 0.1, 0.02),
        State::new(0.3, 0.05, 0.2, 0.1),
    ] {
        spectrum_from("colorado 0.40", &co40, s0);
    }
}
