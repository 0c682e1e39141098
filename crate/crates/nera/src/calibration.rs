//! Real-coded genetic-algorithm estimation of the ten non-`h` parameters
//! from observed prevalence series.
//!
//! The fitness of a candidate is the weighted sum of squared errors between
//! the simulated and observed compartments at the sample times, starting
//! from the first observed sample; candidates that break the integrator are
//! penalized with `+inf` instead of raising. The GA itself is standard:
//! tournament selection, BLX blend crossover, per-gene Gaussian mutation
//! clipped to the bounds box, elitism. One sequential RNG stream drives all
//! stochastic choices, so runs are reproducible from the seed; fitness
//! evaluations are pure and run in parallel without touching the RNG.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigDoc, ConfigError};
use crate::integrate::{integrate_at, IntegratorConfig};
use crate::model::ModelVariant;
use crate::params::ParameterSet;
use crate::series::ObservedSeries;

/// The ten estimated parameters, in genome order. `h` stays fixed.
pub const CALIBRATED_KEYS: [&str; 10] = [
    "beta1", "beta2", "beta3", "beta4", "r1", "r2", "r3", "alpha1", "alpha2", "gamma1",
];

pub type Genome = [f64; 10];

/// Per-parameter search box. Parameters are positive rates, so the lower
/// bounds must be strictly positive.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Genome,
    pub hi: Genome,
}

impl Default for Bounds {
    fn default() -> Self {
        // The spec box is (0, 1]; 1e-4 stands in for the open lower end.
        Bounds {
            lo: [1e-4; 10],
            hi: [1.0; 10],
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<(), CalibrationError> {
        for i in 0..10 {
            if !(self.lo[i] > 0.0) || !(self.lo[i] < self.hi[i]) {
                return Err(CalibrationError::InvalidBounds {
                    key: CALIBRATED_KEYS[i],
                    lo: self.lo[i],
                    hi: self.hi[i],
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, g: &Genome) -> bool {
        (0..10).all(|i| g[i] >= self.lo[i] && g[i] <= self.hi[i])
    }

    /// Parse from a flat config with `<param>_lo` / `<param>_hi` keys;
    /// missing keys keep the default box.
    pub fn from_config_str(text: &str) -> Result<Self, ConfigError> {
        let doc = ConfigDoc::parse(text)?;
        let mut known = Vec::new();
        for key in CALIBRATED_KEYS {
            known.push(format!("{key}_lo"));
            known.push(format!("{key}_hi"));
        }
        let known_refs: Vec<&str> = known.iter().map(|s| s.as_str()).collect();
        doc.require_known(&known_refs)?;
        let mut b = Bounds::default();
        for (i, key) in CALIBRATED_KEYS.iter().enumerate() {
            if let Some(v) = doc.f64_opt(&format!("{key}_lo"))? {
                b.lo[i] = v;
            }
            if let Some(v) = doc.f64_opt(&format!("{key}_hi"))? {
                b.hi[i] = v;
            }
        }
        if let Err(e) = b.validate() {
            return Err(ConfigError::Invalid { msg: e.to_string() });
        }
        Ok(b)
    }
}

/// Build a full parameter set from a genome plus the fixed half-saturation.
pub fn genome_to_params(g: &Genome, h: f64) -> ParameterSet {
    ParameterSet {
        beta1: g[0],
        beta2: g[1],
        beta3: g[2],
        beta4: g[3],
        r1: g[4],
        r2: g[5],
        r3: g[6],
        alpha1: g[7],
        alpha2: g[8],
        gamma1: g[9],
        h,
    }
}

pub fn params_to_genome(p: &ParameterSet) -> Genome {
    [
        p.beta1, p.beta2, p.beta3, p.beta4, p.r1, p.r2, p.r3, p.alpha1, p.alpha2, p.gamma1,
    ]
}

#[derive(Clone, Debug)]
pub struct CalibrationProblem {
    pub series: ObservedSeries,
    pub bounds: Bounds,
    /// Fixed half-saturation (conventionally 1/2).
    pub h: f64,
    pub integrator: IntegratorConfig,
    pub variant: ModelVariant,
    /// Initial values for compartments missing from the first sample.
    pub missing_fill: [f64; 4],
    /// Per-compartment SSE weights.
    pub weights: [f64; 4],
}

impl CalibrationProblem {
    pub fn new(series: ObservedSeries) -> Self {
        CalibrationProblem {
            series,
            bounds: Bounds::default(),
            h: 0.5,
            integrator: IntegratorConfig::default(),
            variant: ModelVariant::Full,
            missing_fill: [0.0; 4],
            weights: [1.0; 4],
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// BLX exploration factor for the blend crossover.
    pub blend_alpha: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Gaussian mutation sigma as a fraction of the box width.
    pub mutation_scale: f64,
    pub elitism_count: usize,
    pub tournament_size: usize,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 200,
            generations: 300,
            crossover_rate: 0.9,
            blend_alpha: 0.5,
            mutation_rate: 0.1,
            mutation_scale: 0.05,
            elitism_count: 2,
            tournament_size: 3,
            rng_seed: 42,
        }
    }
}

pub const GA_CONFIG_KEYS: [&str; 9] = [
    "population_size",
    "generations",
    "crossover_rate",
    "blend_alpha",
    "mutation_rate",
    "mutation_scale",
    "elitism_count",
    "tournament_size",
    "rng_seed",
];

impl GaConfig {
    pub fn validate(&self) -> Result<(), CalibrationError> {
        if self.population_size < 4 {
            return Err(CalibrationError::InvalidConfig(
                "population_size must be at least 4".into(),
            ));
        }
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(CalibrationError::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {rate}"
                )));
            }
        }
        if !(self.mutation_scale >= 0.0) || !(self.blend_alpha >= 0.0) {
            return Err(CalibrationError::InvalidConfig(
                "mutation_scale and blend_alpha must be nonnegative".into(),
            ));
        }
        if self.elitism_count >= self.population_size {
            return Err(CalibrationError::InvalidConfig(
                "elitism_count must be below population_size".into(),
            ));
        }
        if self.tournament_size == 0 {
            return Err(CalibrationError::InvalidConfig(
                "tournament_size must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Parse from a flat config; missing keys keep their defaults.
    pub fn from_config_str(text: &str) -> Result<Self, ConfigError> {
        let doc = ConfigDoc::parse(text)?;
        doc.require_known(&GA_CONFIG_KEYS)?;
        let mut ga = GaConfig::default();
        if let Some(v) = doc.usize_opt("population_size")? {
            ga.population_size = v;
        }
        if let Some(v) = doc.usize_opt("generations")? {
            ga.generations = v;
        }
        if let Some(v) = doc.f64_opt("crossover_rate")? {
            ga.crossover_rate = v;
        }
        if let Some(v) = doc.f64_opt("blend_alpha")? {
            ga.blend_alpha = v;
        }
        if let Some(v) = doc.f64_opt("mutation_rate")? {
            ga.mutation_rate = v;
        }
        if let Some(v) = doc.f64_opt("mutation_scale")? {
            ga.mutation_scale = v;
        }
        if let Some(v) = doc.usize_opt("elitism_count")? {
            ga.elitism_count = v;
        }
        if let Some(v) = doc.usize_opt("tournament_size")? {
            ga.tournament_size = v;
        }
        if let Some(v) = doc.u64_opt("rng_seed")? {
            ga.rng_seed = v;
        }
        if let Err(e) = ga.validate() {
            return Err(ConfigError::Invalid { msg: e.to_string() });
        }
        Ok(ga)
    }
}

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("invalid GA config: {0}")]
    InvalidConfig(String),
    #[error("invalid bounds for `{key}`: [{lo}, {hi}] (requires 0 < lo < hi)")]
    InvalidBounds { key: &'static str, lo: f64, hi: f64 },
}

/// Weighted SSE of the candidate's simulated trajectory against the
/// observations; `+inf` when the simulation fails or the SSE is not finite.
pub fn fitness(candidate: &ParameterSet, prob: &CalibrationProblem) -> f64 {
    let s0 = prob.series.first_full_state(prob.missing_fill);
    let sim = match integrate_at(
        candidate,
        s0,
        &prob.series.times,
        &prob.integrator,
        prob.variant,
    ) {
        Ok(states) => states,
        Err(_) => return f64::INFINITY,
    };
    let mut sse = 0.0;
    for (row, state) in prob.series.values.iter().zip(&sim) {
        for i in 0..4 {
            if let Some(obs) = row[i] {
                let d = state.0[i] - obs;
                sse += prob.weights[i] * d * d;
            }
        }
    }
    if sse.is_finite() {
        sse
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Best fitness in the population (monotone under elitism).
    pub best: f64,
    pub mean: f64,
}

#[derive(Clone, Debug)]
pub struct CalibrationResult {
    pub best: ParameterSet,
    pub best_genome: Genome,
    pub best_fitness: f64,
    /// Entry 0 is the initial random population; one entry per generation
    /// after that.
    pub history: Vec<GenerationStats>,
}

/// Run the GA. Deterministic for a fixed `rng_seed`.
pub fn calibrate(
    prob: &CalibrationProblem,
    ga: &GaConfig,
) -> Result<CalibrationResult, CalibrationError> {
    ga.validate()?;
    prob.bounds.validate()?;
    let b = &prob.bounds;
    let mut rng = ChaCha8Rng::seed_from_u64(ga.rng_seed);

    let eval = |pop: &[Genome]| -> Vec<f64> {
        pop.par_iter()
            .map(|g| fitness(&genome_to_params(g, prob.h), prob))
            .collect()
    };

    let mut population: Vec<Genome> = (0..ga.population_size)
        .map(|_| {
            let mut g = [0.0; 10];
            for i in 0..10 {
                g[i] = rng.random_range(b.lo[i]..=b.hi[i]);
            }
            g
        })
        .collect();
    let mut scores = eval(&population);

    let stats_of = |generation: usize, scores: &[f64]| {
        let best = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        GenerationStats {
            generation,
            best,
            mean,
        }
    };
    let mut history = vec![stats_of(0, &scores)];

    let mutation_sigma: Genome = {
        let mut s = [0.0; 10];
        for i in 0..10 {
            s[i] = ga.mutation_scale * (b.hi[i] - b.lo[i]);
        }
        s
    };

    for generation in 1..=ga.generations {
        // Rank current population (ascending fitness).
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &c| scores[a].partial_cmp(&scores[c]).unwrap());

        let mut next: Vec<Genome> = Vec::with_capacity(ga.population_size);
        let mut next_scores: Vec<f64> = Vec::with_capacity(ga.population_size);
        for &i in order.iter().take(ga.elitism_count) {
            next.push(population[i]);
            next_scores.push(scores[i]);
        }

        let tournament = |rng: &mut ChaCha8Rng| -> usize {
            let mut best = rng.random_range(0..population.len());
            for _ in 1..ga.tournament_size {
                let k = rng.random_range(0..population.len());
                if scores[k] < scores[best] {
                    best = k;
                }
            }
            best
        };

        let mut offspring: Vec<Genome> = Vec::with_capacity(ga.population_size - next.len());
        while next.len() + offspring.len() < ga.population_size {
            let pa = population[tournament(&mut rng)];
            let pb = population[tournament(&mut rng)];
            let mut child = if rng.random::<f64>() < ga.crossover_rate {
                let mut c = [0.0; 10];
                for i in 0..10 {
                    let (lo, hi) = (pa[i].min(pb[i]), pa[i].max(pb[i]));
                    let d = hi - lo;
                    let span_lo = lo - ga.blend_alpha * d;
                    let span_hi = hi + ga.blend_alpha * d;
                    let v = if span_hi > span_lo {
                        rng.random_range(span_lo..=span_hi)
                    } else {
                        lo
                    };
                    c[i] = v.clamp(b.lo[i], b.hi[i]);
                }
                c
            } else {
                pa
            };
            for i in 0..10 {
                if rng.random::<f64>() < ga.mutation_rate && mutation_sigma[i] > 0.0 {
                    let normal = Normal::new(0.0, mutation_sigma[i]).expect("sigma > 0");
                    child[i] = (child[i] + normal.sample(&mut rng)).clamp(b.lo[i], b.hi[i]);
                }
            }
            offspring.push(child);
        }

        let offspring_scores = eval(&offspring);
        next.extend(offspring);
        next_scores.extend(offspring_scores);
        population = next;
        scores = next_scores;
        history.push(stats_of(generation, &scores));
    }

    let best_idx = (0..population.len())
        .min_by(|&a, &c| scores[a].partial_cmp(&scores[c]).unwrap())
        .expect("population is non-empty");
    let best_genome = population[best_idx];
    Ok(CalibrationResult {
        best: genome_to_params(&best_genome, prob.h),
        best_genome,
        best_fitness: scores[best_idx],
        history,
    })
}

/// Sample `count` yearly points from a forward simulation of `p`; handy for
/// synthetic round-trip checks and demos.
pub fn synthetic_series(
    p: &ParameterSet,
    s0: crate::model::State,
    count: usize,
    cfg: &IntegratorConfig,
    variant: ModelVariant,
) -> Result<ObservedSeries, crate::integrate::IntegrateError> {
    let times: Vec<f64> = (0..count).map(|i| i as f64).collect();
    let states = integrate_at(p, s0, &times, cfg, variant)?;
    Ok(ObservedSeries {
        times,
        values: states
            .iter()
            .map(|s| [Some(s.0[0]), Some(s.0[1]), Some(s.0[2]), Some(s.0[3])])
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::State;

    fn colorado_problem(points: usize) -> CalibrationProblem {
        let p = ParameterSet::colorado();
        let series = synthetic_series(
            &p,
            State::new(0.85, 0.06, 0.05, 0.04),
            points,
            &IntegratorConfig::default(),
            ModelVariant::Full,
        )
        .unwrap();
        CalibrationProblem::new(series)
    }

    #[test]
    fn self_fit_is_exact() {
        let prob = colorado_problem(11);
        let f = fitness(&ParameterSet::colorado(), &prob);
        assert!(f < 1e-12, "self-fit fitness {f}");
    }

    #[test]
    fn perturbed_candidate_fits_worse() {
        let prob = colorado_problem(11);
        let base = fitness(&ParameterSet::colorado(), &prob);
        let mut p = ParameterSet::colorado();
        p.r1 += 0.1;
        let worse = fitness(&p, &prob);
        assert!(worse > base && worse > 1e-8, "base {base}, worse {worse}");
    }

    #[test]
    fn integrator_abort_is_penalized_not_raised() {
        let prob = colorado_problem(5);
        // Rates extreme enough to overflow the stages and drive the step
        // size under dt_min.
        let mut p = ParameterSet::colorado();
        p.beta1 = 1e14;
        p.r1 = 1e14;
        p.beta2 = 1e14;
        let f = fitness(&p, &prob);
        assert!(f.is_infinite());
    }

    #[test]
    fn smoke_population_of_four() {
        let prob = colorado_problem(5);
        let ga = GaConfig {
            population_size: 4,
            generations: 1,
            ..GaConfig::default()
        };
        let out = calibrate(&prob, &ga).unwrap();
        assert_eq!(out.history.len(), 2);
        assert!(out.best_fitness.is_finite());
        assert!(prob.bounds.contains(&out.best_genome));
    }

    #[test]
    fn same_seed_same_output() {
        let prob = colorado_problem(6);
        let ga = GaConfig {
            population_size: 16,
            generations: 4,
            rng_seed: 7,
            ..GaConfig::default()
        };
        let a = calibrate(&prob, &ga).unwrap();
        let b = calibrate(&prob, &ga).unwrap();
        assert_eq!(a.best_genome, b.best_genome);
        assert_eq!(a.best_fitness, b.best_fitness);
        for (x, y) in a.history.iter().zip(&b.history) {
            assert_eq!(x.best, y.best);
            assert_eq!(x.mean, y.mean);
        }
    }

    #[test]
    fn best_fitness_is_monotone() {
        let prob = colorado_problem(6);
        let ga = GaConfig {
            population_size: 24,
            generations: 8,
            rng_seed: 3,
            ..GaConfig::default()
        };
        let out = calibrate(&prob, &ga).unwrap();
        for w in out.history.windows(2) {
            assert!(w[1].best <= w[0].best);
        }
    }

    #[test]
    fn ga_config_from_flat_file() {
        let text = "population_size = 50\ngenerations = 10\nrng_seed = 9\n";
        let ga = GaConfig::from_config_str(text).unwrap();
        assert_eq!(ga.population_size, 50);
        assert_eq!(ga.generations, 10);
        assert_eq!(ga.rng_seed, 9);
        assert_eq!(ga.tournament_size, GaConfig::default().tournament_size);
    }

    #[test]
    fn bounds_reject_nonpositive_lo() {
        let b = Bounds {
            lo: [0.0; 10],
            hi: [1.0; 10],
        };
        assert!(b.validate().is_err());
        assert!(Bounds::from_config_str("beta1_lo = 0\n").is_err());
    }
}
