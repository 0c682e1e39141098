//! Bifurcation diagrams over the non-user growth rate `beta1`: per-sample
//! post-transient orbit peaks, regime labeling, and boundary detection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::integrate::{find_peaks, integrate, IntegratorConfig, Scheme};
use crate::lyapunov::{lyapunov_spectrum, AttractorClass, LyapunovConfig, LyapunovSpectrum};
use crate::model::{ModelVariant, State};
use crate::params::ParameterSet;

/// Which state component the diagram observes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    N,
    E,
    R,
    A,
}

impl Observable {
    pub fn index(&self) -> usize {
        match self {
            Observable::N => 0,
            Observable::E => 1,
            Observable::R => 2,
            Observable::A => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Observable::N => "N",
            Observable::E => "E",
            Observable::R => "R",
            Observable::A => "A",
        }
    }
}

impl std::str::FromStr for Observable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "N" | "n" => Ok(Observable::N),
            "E" | "e" => Ok(Observable::E),
            "R" | "r" => Ok(Observable::R),
            "A" | "a" => Ok(Observable::A),
            other => Err(format!("unknown observable `{other}` (N|E|R|A)")),
        }
    }
}

/// Initial-condition policy along the sweep.
///
/// `Warm` reuses the final state of the previous sample (continuation
/// seeding): transients die fast and the diagram stays on one attractor
/// branch, which also means multistability can hide. `Cold` restarts every
/// sample from the same state and parallelizes freely.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Seeding {
    Warm,
    Cold,
}

impl std::str::FromStr for Seeding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "warm" => Ok(Seeding::Warm),
            "cold" => Ok(Seeding::Cold),
            other => Err(format!("unknown seeding mode `{other}` (warm|cold)")),
        }
    }
}

/// Per-sample regime label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// No orbit peaks: the sample settled to an equilibrium.
    Stationary,
    /// Few tight peak clusters.
    Periodic,
    /// Peak values spread beyond the clustering tolerance.
    Aperiodic,
    /// Integration failed; the sample is an empty marker.
    Failed,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Stationary => "stationary",
            Regime::Periodic => "periodic",
            Regime::Aperiodic => "aperiodic",
            Regime::Failed => "failed",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepConfig {
    pub lo: f64,
    pub hi: f64,
    /// Number of `beta1` samples (>= 2), evenly spaced over `[lo, hi]`.
    pub steps: usize,
    pub observable: Observable,
    pub variant: ModelVariant,
    pub seeding: Seeding,
    pub initial_state: State,
    pub transient: f64,
    /// Measurement window after the transient.
    pub window: f64,
    pub dt: f64,
    /// Attach a Lyapunov spectrum to every sample.
    pub with_lce: Option<LyapunovConfig>,
    /// Peaks closer than this are one cluster; clusters wider than this
    /// mark an aperiodic sample.
    pub cluster_tolerance: f64,
    /// Periodic samples may have at most this many clusters.
    pub max_periodic_clusters: usize,
    pub peak_prominence: f64,
}

/// Generic interior start used by sweeps and the batch CLI.
pub const DEFAULT_SWEEP_STATE: State = State([0.8, 0.1, 0.05, 0.05]);

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            lo: 0.02,
            hi: 0.8,
            steps: 400,
            observable: Observable::N,
            variant: ModelVariant::Full,
            seeding: Seeding::Warm,
            initial_state: DEFAULT_SWEEP_STATE,
            transient: 5e3,
            window: 2e3,
            dt: 0.01,
            with_lce: None,
            cluster_tolerance: 1e-3,
            max_periodic_clusters: 6,
            peak_prominence: 1e-12,
        }
    }
}

/// A contiguous group of near-equal peak values.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PeakCluster {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl PeakCluster {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Clone, Debug)]
pub struct SweepSample {
    pub beta1: f64,
    /// Refined peak values of the observed variable, ascending.
    pub peaks: Vec<f64>,
    pub clusters: Vec<PeakCluster>,
    pub regime: Regime,
    pub spectrum: Option<LyapunovSpectrum>,
}

#[derive(Clone, Debug)]
pub struct BifurcationDiagram {
    /// Always `beta1`; kept explicit so output files are self-describing.
    pub parameter_name: &'static str,
    pub observable: Observable,
    pub samples: Vec<SweepSample>,
    pub config: SweepConfig,
}

/// Group sorted peak values into clusters: a gap above `tol` starts a new
/// cluster.
pub fn cluster_peaks(sorted_peaks: &[f64], tol: f64) -> Vec<PeakCluster> {
    let mut clusters: Vec<PeakCluster> = Vec::new();
    for &v in sorted_peaks {
        match clusters.last_mut() {
            Some(c) if v - c.hi <= tol => {
                c.hi = v;
                c.count += 1;
            }
            _ => clusters.push(PeakCluster {
                lo: v,
                hi: v,
                count: 1,
            }),
        }
    }
    clusters
}

fn label_from_clusters(clusters: &[PeakCluster], cfg: &SweepConfig) -> Regime {
    if clusters.is_empty() {
        return Regime::Stationary;
    }
    let tight = clusters.iter().all(|c| c.width() <= cfg.cluster_tolerance);
    if clusters.len() <= cfg.max_periodic_clusters && tight {
        Regime::Periodic
    } else {
        Regime::Aperiodic
    }
}

fn measure_sample(
    p: &ParameterSet,
    beta1: f64,
    s0: State,
    cfg: &SweepConfig,
) -> (SweepSample, Option<State>) {
    let params = p.with_beta1(beta1);
    let int_cfg = IntegratorConfig {
        scheme: Scheme::Rk4Fixed,
        dt: cfg.dt,
        t_end: cfg.transient + cfg.window,
        transient: cfg.transient,
        record_stride: 1,
        ..IntegratorConfig::default()
    };
    let traj = match integrate(&params, s0, &int_cfg, cfg.variant) {
        Ok(t) => t,
        Err(_) => {
            return (
                SweepSample {
                    beta1,
                    peaks: Vec::new(),
                    clusters: Vec::new(),
                    regime: Regime::Failed,
                    spectrum: None,
                },
                None,
            )
        }
    };
    let ys = traj.component(cfg.observable.index());
    let mut peaks: Vec<f64> = find_peaks(&traj.times, &ys, cfg.peak_prominence)
        .into_iter()
        .map(|p| p.value)
        .collect();
    peaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let clusters = cluster_peaks(&peaks, cfg.cluster_tolerance);
    let regime = label_from_clusters(&clusters, cfg);

    let spectrum = cfg
        .with_lce
        .as_ref()
        .and_then(|lcfg| lyapunov_spectrum(&params, s0, lcfg).ok());

    let final_state = traj.final_state().map(|(_, s)| s);
    (
        SweepSample {
            beta1,
            peaks,
            clusters,
            regime,
            spectrum,
        },
        final_state,
    )
}

/// Sweep `beta1` over `[lo, hi]` and measure the post-transient orbit peaks
/// of the observed variable at each sample.
///
/// Warm sweeps run sequentially by construction; cold sweeps parallelize
/// over samples. Output order is ascending in `beta1` either way, and the
/// whole sweep is deterministic for a fixed config.
pub fn sweep(base: &ParameterSet, cfg: &SweepConfig) -> BifurcationDiagram {
    let steps = cfg.steps.max(2);
    let beta1_at = |i: usize| cfg.lo + (cfg.hi - cfg.lo) * (i as f64) / ((steps - 1) as f64);

    let samples = match cfg.seeding {
        Seeding::Warm => {
            let mut out = Vec::with_capacity(steps);
            let mut s0 = cfg.initial_state;
            for i in 0..steps {
                let (sample, final_state) = measure_sample(base, beta1_at(i), s0, cfg);
                if let Some(fs) = final_state {
                    s0 = fs;
                }
                out.push(sample);
            }
            out
        }
        Seeding::Cold => (0..steps)
            .into_par_iter()
            .map(|i| measure_sample(base, beta1_at(i), cfg.initial_state, cfg).0)
            .collect(),
    };

    BifurcationDiagram {
        parameter_name: "beta1",
        observable: cfg.observable,
        samples,
        config: *cfg,
    }
}

/// How [`detect_boundaries`] labels samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundaryCriterion {
    /// Peak-set dispersion (cluster count and width).
    PeakDispersion,
    /// Attached Lyapunov classification; samples without a usable spectrum
    /// are skipped.
    LceClassification,
}

fn sample_label(s: &SweepSample, criterion: BoundaryCriterion) -> Option<Regime> {
    match criterion {
        BoundaryCriterion::PeakDispersion => match s.regime {
            Regime::Failed => None,
            r => Some(r),
        },
        BoundaryCriterion::LceClassification => {
            let spec = s.spectrum.as_ref()?;
            Some(match spec.classification {
                AttractorClass::FixedPoint => Regime::Stationary,
                AttractorClass::LimitCycle => Regime::Periodic,
                AttractorClass::QuasiPeriodic2
                | AttractorClass::QuasiPeriodic3
                | AttractorClass::Chaos
                | AttractorClass::Hyperchaos => Regime::Aperiodic,
                AttractorClass::Unclassified => return None,
            })
        }
    }
}

/// Regime-change boundaries: midpoints between adjacent samples whose
/// (majority-of-three smoothed) label changes. Sweeps with no label change
/// give an empty list.
pub fn detect_boundaries(d: &BifurcationDiagram, criterion: BoundaryCriterion) -> Vec<f64> {
    let labeled: Vec<(f64, Regime)> = d
        .samples
        .iter()
        .filter_map(|s| sample_label(s, criterion).map(|l| (s.beta1, l)))
        .collect();
    if labeled.len() < 2 {
        return Vec::new();
    }
    // Majority-of-three smoothing so single-sample flips do not count as
    // two boundaries.
    let smoothed: Vec<(f64, Regime)> = labeled
        .iter()
        .enumerate()
        .map(|(i, &(b, l))| {
            if i == 0 || i + 1 == labeled.len() {
                return (b, l);
            }
            let (prev, next) = (labeled[i - 1].1, labeled[i + 1].1);
            if prev == next && prev != l {
                (b, prev)
            } else {
                (b, l)
            }
        })
        .collect();
    let mut boundaries = Vec::new();
    for w in smoothed.windows(2) {
        if w[0].1 != w[1].1 {
            boundaries.push(0.5 * (w[0].0 + w[1].0));
        }
    }
    boundaries
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_cfg() -> SweepConfig {
        SweepConfig {
            transient: 2000.0,
            window: 1000.0,
            dt: 0.02,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn degenerate_range_gives_matching_peak_sets() {
        // Two samples a hair apart on a limit cycle: identical attractor.
        let p = ParameterSet::colorado();
        let cfg = SweepConfig {
            lo: 0.30,
            hi: 0.30 + 1e-6,
            steps: 2,
            // Long enough for the cold first sample to settle onto the
            // cycle (transverse decay rate ~2e-3).
            transient: 9000.0,
            window: 1500.0,
            ..quick_cfg()
        };
        let d = sweep(&p, &cfg);
        assert_eq!(d.samples.len(), 2);
        let a = &d.samples[0];
        let b = &d.samples[1];
        assert_eq!(a.regime, Regime::Periodic);
        assert_eq!(b.regime, Regime::Periodic);
        assert_eq!(a.clusters.len(), b.clusters.len());
        for (ca, cb) in a.clusters.iter().zip(&b.clusters) {
            assert!(
                (ca.lo - cb.lo).abs() < 1e-4 && (ca.hi - cb.hi).abs() < 1e-4,
                "clusters differ: {ca:?} vs {cb:?}"
            );
        }
    }

    #[test]
    fn equilibrium_regime_has_no_boundaries() {
        // A pure sink everywhere: beta2 > r1 kills E and the system falls
        // into the drug-free state for every beta1 in the range.
        let mut p = ParameterSet::colorado();
        p.r1 = 0.01;
        p.alpha1 = 0.01;
        p.alpha2 = 0.01;
        let cfg = SweepConfig {
            lo: 0.05,
            hi: 0.2,
            steps: 12,
            transient: 500.0,
            window: 500.0,
            dt: 0.02,
            ..SweepConfig::default()
        };
        let d = sweep(&p, &cfg);
        for s in &d.samples {
            assert_eq!(s.regime, Regime::Stationary, "beta1 = {}", s.beta1);
        }
        assert!(detect_boundaries(&d, BoundaryCriterion::PeakDispersion).is_empty());
    }

    #[test]
    fn cold_sweep_is_deterministic_and_ordered() {
        let p = ParameterSet::colorado();
        let cfg = SweepConfig {
            lo: 0.28,
            hi: 0.33,
            steps: 6,
            seeding: Seeding::Cold,
            transient: 1000.0,
            window: 500.0,
            dt: 0.02,
            ..SweepConfig::default()
        };
        let a = sweep(&p, &cfg);
        let b = sweep(&p, &cfg);
        assert!(a
            .samples
            .windows(2)
            .all(|w| w[1].beta1 > w[0].beta1));
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x.beta1, y.beta1);
            assert_eq!(x.peaks, y.peaks);
        }
    }

    #[test]
    fn clustering_splits_on_gaps() {
        let peaks = [0.1, 0.1002, 0.1004, 0.5, 0.5001];
        let clusters = cluster_peaks(&peaks, 1e-3);
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters[0].count, 3);
        assert_eq!(clusters[1].count, 2);
    }

    #[test]
    fn wide_chained_cluster_is_aperiodic() {
        // A dense band chains into one cluster; its width must still mark
        // the sample as aperiodic.
        let peaks: Vec<f64> = (0..40).map(|i| 0.6 + 1e-4 * i as f64).collect();
        let clusters = cluster_peaks(&peaks, 1e-3);
        assert_eq!(clusters.len(), 1);
        let cfg = SweepConfig::default();
        assert_eq!(label_from_clusters(&clusters, &cfg), Regime::Aperiodic);
    }
}
