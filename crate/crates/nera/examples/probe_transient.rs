// Scratch probe: transient/averaging sensitivity of the borderline lambda2.

use nera::bifurcation::DEFAULT_SWEEP_STATE;
use nera::lyapunov::{lyapunov_spectrum, LyapunovConfig};
use nera::params::ParameterSet;

fn main() {
    let cases = [
        ("washington 0.34", ParameterSet::washington().with_beta1(0.34)),
        ("colorado 0.40", ParameterSet::colorado().with_beta1(0.40)),
        ("colorado 0.35", ParameterSet::colorado().with_beta1(0.35)),
    ];
    for (name, p) in &cases {
        for (transient, total) in [(5e3, 2e5), (2e4, 2e5), (5e4, 2e5), (2e4, 4e5)] {
            let cfg = LyapunovConfig {
                transient,
                total_time: total,
                ..LyapunovConfig::default()
            };
            let spec = lyapunov_spectrum(p, DEFAULT_SWEEP_STATE, &cfg).unwrap();
            println!(
                "{name} transient={transient:.0e} total={total:.0e}: [{:+.6}, {:+.6}, {:+.6}, {:+.6}] {}",
                spec.exponents[0],
                spec.exponents[1],
                spec.exponents[2],
                spec.exponents[3],
                spec.classification.name()
            );
        }
    }
}
