use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use nera::calibration::{calibrate, Bounds, CalibrationProblem, GaConfig};
use nera::manifest::RunManifest;
use nera::series::ObservedSeries;

use crate::opts::{config_err, read_to_string, runtime_err, Failure, OutputOpts};
use crate::output::{fmt_f64, write_csv, write_manifest, write_text, TOOL_VERSION};

pub const HISTORY_HEADER: &str = "generation,best,mean";

#[derive(clap::Args)]
pub struct Args {
    #[command(flatten)]
    out: OutputOpts,
    /// Observed series CSV (`t,N,E,R,A`, blanks for unobserved)
    #[arg(long, required_unless_present = "manifest")]
    data: Option<PathBuf>,
    /// Per-parameter box file (`<name>_lo` / `<name>_hi` keys)
    #[arg(long)]
    bounds: Option<PathBuf>,
    /// GA hyperparameter file
    #[arg(long)]
    ga_config: Option<PathBuf>,
    /// Override the GA RNG seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Serialize, Deserialize)]
pub struct Resolved {
    pub series_csv: String,
    pub bounds: Bounds,
    pub ga: GaConfig,
}

pub fn run(args: Args) -> Result<(), Failure> {
    args.out.init_threads();
    let resolved: Resolved = match args.out.load_manifest("calibrate")? {
        Some(r) => r,
        None => {
            let data_path = args.data.as_ref().expect("clap requires --data");
            let series_csv = read_to_string(data_path)?;
            // Parse eagerly for the line/field diagnostic.
            ObservedSeries::parse_csv(&series_csv)
                .map_err(|e| Failure::Config(format!("{}: {e}", data_path.display())))?;
            let bounds = match &args.bounds {
                Some(path) => Bounds::from_config_str(&read_to_string(path)?)
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?,
                None => Bounds::default(),
            };
            let mut ga = match &args.ga_config {
                Some(path) => GaConfig::from_config_str(&read_to_string(path)?)
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?,
                None => GaConfig::default(),
            };
            if let Some(seed) = args.seed {
                ga.rng_seed = seed;
            }
            Resolved {
                series_csv,
                bounds,
                ga,
            }
        }
    };

    let series = ObservedSeries::parse_csv(&resolved.series_csv).map_err(config_err)?;
    let mut problem = CalibrationProblem::new(series);
    problem.bounds = resolved.bounds;

    let result = calibrate(&problem, &resolved.ga).map_err(config_err)?;

    write_text(
        &args.out.out_dir,
        "calibrated_params.conf",
        &result.best.to_config_string(),
    )?;
    write_csv(
        &args.out.out_dir,
        "fitness_history.csv",
        HISTORY_HEADER,
        result.history.iter().map(|s| {
            format!("{},{},{}", s.generation, fmt_f64(s.best), fmt_f64(s.mean))
        }),
    )?;

    let mut manifest = RunManifest::new(
        TOOL_VERSION,
        "calibrate",
        serde_json::to_value(&resolved).map_err(runtime_err)?,
    );
    manifest.rng_seed = Some(resolved.ga.rng_seed);
    manifest.outputs = vec![
        "calibrated_params.conf".into(),
        "fitness_history.csv".into(),
    ];
    write_manifest(&args.out.out_dir, &manifest)?;
    eprintln!(
        "calibrate: best fitness {:.6e} after {} generations (seed {})",
        result.best_fitness,
        resolved.ga.generations,
        resolved.ga.rng_seed
    );
    Ok(())
}
