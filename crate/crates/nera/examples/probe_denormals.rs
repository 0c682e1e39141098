// Scratch probe: how deep do components sink on the slow attractors?

use nera::integrate::rk4_step;
use nera::model::{vector_field, ModelVariant, State};
use nera::params::ParameterSet;
use std::time::Instant;

fn main() {
    for (name, p, b1) in [
        ("colorado", ParameterSet::colorado(), 0.30),
        ("washington", ParameterSet::washington(), 0.27),
        ("washington", ParameterSet::washington(), 0.345),
    ] {
        let p = p.with_beta1(b1);
        let f = |y: &[f64; 4]| vector_field(&p, State(*y), ModelVariant::Full).0;
        let mut s = [0.8, 0.1, 0.05, 0.05];
        let mut min_nonzero = [f64::INFINITY; 4];
        let mut denormal_steps = [0u64; 4];
        let t0 = Instant::now();
        for _ in 0..2_000_000 {
            s = rk4_step(&f, &s, 0.01);
            for i in 0..4 {
                let v = s[i];
                if v > 0.0 {
                    if v < min_nonzero[i] {
                        min_nonzero[i] = v;
                    }
                    if v < 2.3e-308 {
                        denormal_steps[i] += 1;
                    }
                }
            }
        }
        println!(
            "{name} b1={b1}: min_nonzero={:?} denormal_steps={:?} final={:?} ({:.1}s for 2e4 t.u.)",
            min_nonzero.map(|x| format!("{x:.2e}")),
            denormal_steps,
            s.map(|x| format!("{x:.2e}")),
            t0.elapsed().as_secs_f64()
        );
    }
}
