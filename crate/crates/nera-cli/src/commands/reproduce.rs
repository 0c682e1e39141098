use serde::{Deserialize, Serialize};

use nera::bifurcation::{detect_boundaries, sweep, BoundaryCriterion, DEFAULT_SWEEP_STATE};
use nera::lyapunov::{lyapunov_spectrum, LyapunovConfig};
use nera::manifest::RunManifest;
use nera::params::ParameterSet;
use nera::stability::eigenvalues_at;

use crate::commands::bifurcate::{
    diagram_rows, regime_rows, SweepConfigWire, BOUNDARIES_HEADER, DIAGRAM_HEADER, REGIMES_HEADER,
};
use crate::commands::equilibria::{collect_reports, csv_row as equilibrium_row, EQUILIBRIA_HEADER};
use crate::commands::lyapunov::{csv_row as lyapunov_row, LYAPUNOV_HEADER};
use crate::commands::stability::{csv_rows as stability_rows, STABILITY_HEADER};
use crate::opts::{runtime_err, Failure, OutputOpts};
use crate::output::{write_csv, write_manifest, TOOL_VERSION};

/// beta1 values whose spectra the pipeline reports per preset (the points
/// exemplifying each regime of the published sweep).
pub fn reference_betas(preset: &str) -> Vec<f64> {
    match preset {
        "washington" => vec![0.27, 0.34, 0.345, 0.3485],
        _ => vec![0.30, 0.35, 0.40, 0.60],
    }
}

fn default_range(preset: &str) -> (f64, f64) {
    match preset {
        "washington" => (0.02, 0.36),
        _ => (0.02, 0.8),
    }
}

#[derive(clap::Args)]
pub struct Args {
    /// Bundled preset to reproduce
    #[arg(value_parser = ParameterSet::PRESET_NAMES)]
    preset: String,
    #[command(flatten)]
    out: OutputOpts,
    /// Sweep samples
    #[arg(long, default_value_t = 400)]
    steps: usize,
    /// Override the sweep range as `lo:hi`
    #[arg(long, value_parser = crate::opts::parse_range)]
    range: Option<crate::opts::Range>,
    /// Attach a Lyapunov spectrum to every sweep sample (slow); boundaries
    /// then come from the spectra instead of peak dispersion
    #[arg(long)]
    with_lce: bool,
    /// Averaging time for the reference-point spectra
    #[arg(long, default_value_t = 2e5)]
    lce_total_time: f64,
}

#[derive(Clone, Serialize, Deserialize)]
pub struct Resolved {
    pub preset: String,
    pub params: ParameterSet,
    pub sweep: SweepConfigWire,
    pub reference_betas: Vec<f64>,
    pub lce_total_time: f64,
}

pub fn run(args: Args) -> Result<(), Failure> {
    args.out.init_threads();
    let resolved: Resolved = match args.out.load_manifest("reproduce")? {
        Some(r) => r,
        None => {
            let params = ParameterSet::preset(&args.preset)
                .ok_or_else(|| Failure::Config(format!("unknown preset `{}`", args.preset)))?;
            let (lo, hi) = match args.range {
                Some(r) => (r.lo, r.hi),
                None => default_range(&args.preset),
            };
            Resolved {
                preset: args.preset.clone(),
                params,
                sweep: SweepConfigWire {
                    lo,
                    hi,
                    steps: args.steps,
                    obs: "N".into(),
                    seeding: "warm".into(),
                    s0: DEFAULT_SWEEP_STATE,
                    transient: 5e3,
                    window: 2e3,
                    dt: 0.01,
                    with_lce: args.with_lce,
                    lce_total_time: 2e4,
                },
                reference_betas: reference_betas(&args.preset),
                lce_total_time: args.lce_total_time,
            }
        }
    };
    let dir = &args.out.out_dir;
    let mut outputs: Vec<String> = Vec::new();

    // Fixed points and their stability.
    let (reports, _) = collect_reports(&resolved.params, Some(5));
    write_csv(
        dir,
        "equilibria.csv",
        EQUILIBRIA_HEADER,
        reports.iter().map(equilibrium_row),
    )?;
    outputs.push("equilibria.csv".into());

    let mut stab_rows = Vec::new();
    for rep in &reports {
        if !rep.converged || !rep.state.is_finite() {
            continue;
        }
        let stab = eigenvalues_at(&resolved.params, rep).map_err(runtime_err)?;
        stab_rows.extend(stability_rows(&stab));
    }
    write_csv(dir, "stability.csv", STABILITY_HEADER, stab_rows.into_iter())?;
    outputs.push("stability.csv".into());

    // Sweep over beta1 and the regime boundaries.
    let cfg = resolved.sweep.to_config()?;
    let diagram = sweep(&resolved.params, &cfg);
    let criterion = if resolved.sweep.with_lce {
        BoundaryCriterion::LceClassification
    } else {
        BoundaryCriterion::PeakDispersion
    };
    let boundaries = detect_boundaries(&diagram, criterion);
    write_csv(dir, "diagram.csv", DIAGRAM_HEADER, diagram_rows(&diagram).into_iter())?;
    write_csv(
        dir,
        "boundaries.csv",
        BOUNDARIES_HEADER,
        boundaries.iter().map(|b| b.to_string()),
    )?;
    write_csv(dir, "regimes.csv", REGIMES_HEADER, regime_rows(&diagram).into_iter())?;
    outputs.extend([
        "diagram.csv".to_string(),
        "boundaries.csv".to_string(),
        "regimes.csv".to_string(),
    ]);

    // Reference-point spectra.
    let lce_cfg = LyapunovConfig {
        total_time: resolved.lce_total_time,
        ..LyapunovConfig::default()
    };
    let mut lce_rows = Vec::new();
    for &beta1 in &resolved.reference_betas {
        let spec = lyapunov_spectrum(
            &resolved.params.with_beta1(beta1),
            DEFAULT_SWEEP_STATE,
            &lce_cfg,
        )
        .map_err(|e| Failure::Runtime(format!("beta1 = {beta1}: {e}")))?;
        eprintln!(
            "reproduce: lce at beta1 = {beta1}: {} {}",
            spec.pattern,
            spec.classification.name()
        );
        lce_rows.push(lyapunov_row(beta1, &spec));
    }
    write_csv(dir, "lyapunov.csv", LYAPUNOV_HEADER, lce_rows.into_iter())?;
    outputs.push("lyapunov.csv".into());

    let mut manifest = RunManifest::new(
        TOOL_VERSION,
        "reproduce",
        serde_json::to_value(&resolved).map_err(runtime_err)?,
    );
    manifest.preset = Some(resolved.preset.clone());
    manifest.outputs = outputs;
    write_manifest(dir, &manifest)?;
    eprintln!(
        "reproduce {}: boundaries at [{}]",
        resolved.preset,
        boundaries
            .iter()
            .map(|b| format!("{b:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}
