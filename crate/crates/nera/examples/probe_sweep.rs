// Scratch probe: full sweeps for both presets, printing detected boundaries.

use nera::bifurcation::{detect_boundaries, sweep, BoundaryCriterion, Regime, SweepConfig};
use nera::params::ParameterSet;
use std::time::Instant;

fn main() {
    for (name, p, lo, hi) in [
        ("colorado", ParameterSet::colorado(), 0.02, 0.8),
        ("washington", ParameterSet::washington(), 0.02, 0.36),
    ] {
        let cfg = SweepConfig {
            lo,
            hi,
            steps: 400,
            ..SweepConfig::default()
        };
        let t0 = Instant::now();
        let d = sweep(&p, &cfg);
        let boundaries = detect_boundaries(&d, BoundaryCriterion::PeakDispersion);
        let n_aperiodic = d
            .samples
            .iter()
            .filter(|s| s.regime == Regime::Aperiodic)
            .count();
        let n_stationary = d
            .samples
            .iter()
            .filter(|s| s.regime == Regime::Stationary)
            .count();
        println!(
            "{name}: boundaries={:?} aperiodic={n_aperiodic} stationary={n_stationary} ({:.1}s)",
            boundaries
                .iter()
                .map(|b| format!("{b:.4}"))
                .collect::<Vec<_>>(),
            t0.elapsed().as_secs_f64()
        );
        // Regime string for a coarse visual check.
        let mut regimes = String::new();
        for s in &d.samples {
            regimes.push(match s.regime {
                Regime::Stationary => '.',
                Regime::Periodic => 'p',
                Regime::Aperiodic => 'A',
                Regime::Failed => 'x',
            });
        }
        println!("  {regimes}");
    }
}
