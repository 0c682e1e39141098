// Scratch probe: spectra at the reference beta1 points of both presets.

use nera::bifurcation::DEFAULT_SWEEP_STATE;
use nera::lyapunov::{lyapunov_spectrum, LyapunovConfig};
use nera::params::ParameterSet;
use std::time::Instant;

fn main() {
    let cfg = LyapunovConfig::default();
    for (name, p, betas) in [
        (
            "colorado",
            ParameterSet::colorado(),
            vec![0.30, 0.35, 0.40, 0.60],
        ),
        (
            "washington",
            ParameterSet::washington(),
            vec![0.27, 0.34, 0.345, 0.3485],
        ),
    ] {
        for b in betas {
            let t0 = Instant::now();
            let spec = lyapunov_spectrum(&p.with_beta1(b), DEFAULT_SWEEP_STATE, &cfg).unwrap();
            println!(
                "{name} beta1={b}: [{:+.5}, {:+.5}, {:+.5}, {:+.5}] class={} sum={:+.2e} trace_avg={:+.2e} |diff|={:.2e} tail={:.2e} ({:.1}s)",
                spec.exponents[0],
                spec.exponents[1],
                spec.exponents[2],
                spec.exponents[3],
                spec.classification.name(),
                spec.sum(),
                spec.trace_average,
                (spec.sum() - spec.trace_average).abs(),
                spec.tail_dispersion,
                t0.elapsed().as_secs_f64()
            );
        }
    }
}
