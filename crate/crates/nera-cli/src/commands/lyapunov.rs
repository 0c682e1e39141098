use serde::{Deserialize, Serialize};

use nera::lyapunov::{lyapunov_spectrum, LyapunovConfig, LyapunovSpectrum};
use nera::manifest::RunManifest;
use nera::model::{ModelVariant, State};
use nera::params::ParameterSet;

use crate::opts::{parse_state, runtime_err, Failure, ModelOpts, OutputOpts};
use crate::output::{fmt_f64, write_csv, write_manifest, TOOL_VERSION};

pub const LYAPUNOV_HEADER: &str =
    "beta1,lambda1,lambda2,lambda3,lambda4,classification,kaplan_yorke,pattern,hausdorff_label,converged";

#[derive(clap::Args)]
pub struct Args {
    #[command(flatten)]
    model: ModelOpts,
    #[command(flatten)]
    out: OutputOpts,
    /// beta1 values to analyze (repeatable); defaults to the parameter
    /// set's own beta1
    #[arg(long = "beta1")]
    beta1: Vec<f64>,
    #[arg(long, value_parser = parse_state, default_value = "0.8,0.1,0.05,0.05")]
    s0: State,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 5e3)]
    transient: f64,
    /// Averaging time after the transient (>= 1e4)
    #[arg(long, default_value_t = 2e5)]
    total_time: f64,
    #[arg(long, default_value_t = 1.0)]
    renorm_interval: f64,
    #[arg(long, default_value_t = nera::lyapunov::DEFAULT_ZERO_TOLERANCE)]
    zero_tol: f64,
    #[arg(long, default_value = "full")]
    variant: ModelVariant,
    /// Also write the running-mean convergence trace per beta1
    #[arg(long)]
    dump_convergence: bool,
}

#[derive(Clone, Serialize, Deserialize)]
pub struct Resolved {
    pub params: ParameterSet,
    pub preset: Option<String>,
    pub beta1: Vec<f64>,
    pub s0: State,
    pub config: LyapunovConfig,
    pub dump_convergence: bool,
}

pub fn csv_row(beta1: f64, spec: &LyapunovSpectrum) -> String {
    format!(
        "{},{},{},{},{},{},{},\"{}\",{},{}",
        fmt_f64(beta1),
        fmt_f64(spec.exponents[0]),
        fmt_f64(spec.exponents[1]),
        fmt_f64(spec.exponents[2]),
        fmt_f64(spec.exponents[3]),
        spec.classification.name(),
        spec.kaplan_yorke.map(fmt_f64).unwrap_or_default(),
        spec.pattern,
        spec.hausdorff_label,
        spec.converged
    )
}

pub fn run(args: Args) -> Result<(), Failure> {
    args.out.init_threads();
    let resolved: Resolved = match args.out.load_manifest("lyapunov")? {
        Some(r) => r,
        None => {
            let (params, preset) = args.model.resolve()?;
            let beta1 = if args.beta1.is_empty() {
                vec![params.beta1]
            } else {
                args.beta1.clone()
            };
            Resolved {
                params,
                preset,
                beta1,
                s0: args.s0,
                config: LyapunovConfig {
                    variant: args.variant,
                    dt: args.dt,
                    transient: args.transient,
                    total_time: args.total_time,
                    renorm_interval: args.renorm_interval,
                    zero_tolerance: args.zero_tol,
                    record_history: args.dump_convergence,
                    ..LyapunovConfig::default()
                },
                dump_convergence: args.dump_convergence,
            }
        }
    };

    let mut rows = Vec::new();
    let mut outputs = vec!["lyapunov.csv".to_string()];
    for &beta1 in &resolved.beta1 {
        let params = resolved.params.with_beta1(beta1);
        let spec = lyapunov_spectrum(&params, resolved.s0, &resolved.config)
            .map_err(|e| Failure::Runtime(format!("beta1 = {beta1}: {e}")))?;
        eprintln!(
            "lyapunov: beta1 = {beta1}: [{:+.4e}, {:+.4e}, {:+.4e}, {:+.4e}] {} (sum-trace gap {:.2e})",
            spec.exponents[0],
            spec.exponents[1],
            spec.exponents[2],
            spec.exponents[3],
            spec.classification.name(),
            (spec.sum() - spec.trace_average).abs(),
        );
        if resolved.dump_convergence {
            if let Some(history) = &spec.history {
                let name = format!("lyapunov_convergence_{beta1}.csv");
                write_csv(
                    &args.out.out_dir,
                    &name,
                    "t,lambda1,lambda2,lambda3,lambda4",
                    history.iter().map(|(t, m)| {
                        format!(
                            "{},{},{},{},{}",
                            fmt_f64(*t),
                            fmt_f64(m[0]),
                            fmt_f64(m[1]),
                            fmt_f64(m[2]),
                            fmt_f64(m[3])
                        )
                    }),
                )?;
                outputs.push(name);
            }
        }
        rows.push(csv_row(beta1, &spec));
    }
    write_csv(&args.out.out_dir, "lyapunov.csv", LYAPUNOV_HEADER, rows.into_iter())?;

    let mut manifest = RunManifest::new(
        TOOL_VERSION,
        "lyapunov",
        serde_json::to_value(&resolved).map_err(runtime_err)?,
    );
    manifest.preset = resolved.preset.clone();
    manifest.outputs = outputs;
    write_manifest(&args.out.out_dir, &manifest)?;
    Ok(())
}
