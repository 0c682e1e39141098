use serde::{Deserialize, Serialize};

use nera::bifurcation::{
    detect_boundaries, sweep, BifurcationDiagram, BoundaryCriterion, Observable, Seeding,
    SweepConfig,
};
use nera::lyapunov::LyapunovConfig;
use nera::manifest::RunManifest;
use nera::model::State;
use nera::params::ParameterSet;

use crate::opts::{parse_range, parse_state, runtime_err, Failure, ModelOpts, OutputOpts, Range};
use crate::output::{fmt_f64, write_csv, write_manifest, TOOL_VERSION};

pub const DIAGRAM_HEADER: &str = "beta1,peak_value";
pub const BOUNDARIES_HEADER: &str = "beta1";
pub const REGIMES_HEADER: &str =
    "beta1,regime,n_peaks,n_clusters,max_cluster_width,lce_classification";

#[derive(clap::Args)]
pub struct Args {
    #[command(flatten)]
    model: ModelOpts,
    #[command(flatten)]
    out: OutputOpts,
    /// beta1 range as `lo:hi`
    #[arg(long, value_parser = parse_range, default_value = "0.02:0.8")]
    range: Range,
    #[arg(long, default_value_t = 400)]
    steps: usize,
    /// Observed variable
    #[arg(long, default_value = "N")]
    obs: Observable,
    /// Initial-condition policy along the sweep
    #[arg(long, default_value = "warm")]
    seeding: Seeding,
    #[arg(long, value_parser = parse_state, default_value = "0.8,0.1,0.05,0.05")]
    s0: State,
    #[arg(long, default_value_t = 5e3)]
    transient: f64,
    #[arg(long, default_value_t = 2e3)]
    window: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    /// Attach a Lyapunov spectrum to every sample (slow)
    #[arg(long)]
    with_lce: bool,
    /// Averaging time per sample when --with-lce is set
    #[arg(long, default_value_t = 2e4)]
    lce_total_time: f64,
}

// Manifest-friendly mirror of `SweepConfig` (which is serialize-only).
#[derive(Clone, Serialize, Deserialize)]
pub struct SweepConfigWire {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub obs: String,
    pub seeding: String,
    pub s0: State,
    pub transient: f64,
    pub window: f64,
    pub dt: f64,
    pub with_lce: bool,
    pub lce_total_time: f64,
}

impl SweepConfigWire {
    pub fn to_config(&self) -> Result<SweepConfig, Failure> {
        Ok(SweepConfig {
            lo: self.lo,
            hi: self.hi,
            steps: self.steps,
            observable: self.obs.parse().map_err(Failure::Config)?,
            seeding: self.seeding.parse().map_err(Failure::Config)?,
            initial_state: self.s0,
            transient: self.transient,
            window: self.window,
            dt: self.dt,
            with_lce: self.with_lce.then(|| LyapunovConfig {
                total_time: self.lce_total_time,
                transient: self.transient,
                ..LyapunovConfig::default()
            }),
            ..SweepConfig::default()
        })
    }
}

#[derive(Clone, Serialize, Deserialize)]
pub struct ResolvedWire {
    pub params: ParameterSet,
    pub preset: Option<String>,
    pub sweep: SweepConfigWire,
}

pub fn diagram_rows(d: &BifurcationDiagram) -> Vec<String> {
    let mut rows = Vec::new();
    for s in &d.samples {
        for &peak in &s.peaks {
            rows.push(format!("{},{}", fmt_f64(s.beta1), fmt_f64(peak)));
        }
    }
    rows
}

pub fn regime_rows(d: &BifurcationDiagram) -> Vec<String> {
    d.samples
        .iter()
        .map(|s| {
            let width = s
                .clusters
                .iter()
                .map(|c| c.width())
                .fold(0.0_f64, f64::max);
            format!(
                "{},{},{},{},{},{}",
                fmt_f64(s.beta1),
                s.regime.name(),
                s.peaks.len(),
                s.clusters.len(),
                fmt_f64(width),
                s.spectrum
                    .as_ref()
                    .map(|sp| sp.classification.name())
                    .unwrap_or("")
            )
        })
        .collect()
}

pub fn run(args: Args) -> Result<(), Failure> {
    args.out.init_threads();
    let resolved: ResolvedWire = match args.out.load_manifest("bifurcate")? {
        Some(r) => r,
        None => {
            let (params, preset) = args.model.resolve()?;
            ResolvedWire {
                params,
                preset,
                sweep: SweepConfigWire {
                    lo: args.range.lo,
                    hi: args.range.hi,
                    steps: args.steps,
                    obs: args.obs.name().to_string(),
                    seeding: if args.seeding == Seeding::Warm {
                        "warm".into()
                    } else {
                        "cold".into()
                    },
                    s0: args.s0,
                    transient: args.transient,
                    window: args.window,
                    dt: args.dt,
                    with_lce: args.with_lce,
                    lce_total_time: args.lce_total_time,
                },
            }
        }
    };

    let cfg = resolved.sweep.to_config()?;
    let diagram = sweep(&resolved.params, &cfg);
    let criterion = if resolved.sweep.with_lce {
        BoundaryCriterion::LceClassification
    } else {
        BoundaryCriterion::PeakDispersion
    };
    let boundaries = detect_boundaries(&diagram, criterion);

    write_csv(
        &args.out.out_dir,
        "diagram.csv",
        DIAGRAM_HEADER,
        diagram_rows(&diagram).into_iter(),
    )?;
    write_csv(
        &args.out.out_dir,
        "boundaries.csv",
        BOUNDARIES_HEADER,
        boundaries.iter().map(|b| fmt_f64(*b)),
    )?;
    write_csv(
        &args.out.out_dir,
        "regimes.csv",
        REGIMES_HEADER,
        regime_rows(&diagram).into_iter(),
    )?;

    let mut manifest = RunManifest::new(
        TOOL_VERSION,
        "bifurcate",
        serde_json::to_value(&resolved).map_err(runtime_err)?,
    );
    manifest.preset = resolved.preset.clone();
    manifest.outputs = vec![
        "diagram.csv".into(),
        "boundaries.csv".into(),
        "regimes.csv".into(),
    ];
    write_manifest(&args.out.out_dir, &manifest)?;
    eprintln!(
        "bifurcate: {} samples, boundaries at [{}]",
        diagram.samples.len(),
        boundaries
            .iter()
            .map(|b| format!("{b:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}
