use serde::{Deserialize, Serialize};

use nera::integrate::{integrate, IntegratorConfig, Scheme};
use nera::manifest::RunManifest;
use nera::model::{ModelVariant, State};
use nera::params::ParameterSet;

use crate::opts::{parse_state, runtime_err, Failure, ModelOpts, OutputOpts};
use crate::output::{fmt_f64, write_csv, write_manifest, TOOL_VERSION};

#[derive(clap::Args)]
pub struct Args {
    #[command(flatten)]
    model: ModelOpts,
    #[command(flatten)]
    out: OutputOpts,
    /// Integration scheme
    #[arg(long, default_value = "dp54")]
    scheme: Scheme,
    /// Step size (fixed for rk4, initial for dp54)
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 1e-9)]
    abs_tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    rel_tol: f64,
    #[arg(long, default_value_t = 1e3)]
    t_end: f64,
    /// Time span discarded before recording
    #[arg(long, default_value_t = 0.0)]
    transient: f64,
    /// Record every k-th accepted step
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[arg(long, default_value = "full")]
    variant: ModelVariant,
    /// Initial state as `N,E,R,A`
    #[arg(long, value_parser = parse_state, default_value = "0.8,0.1,0.05,0.05")]
    s0: State,
}

#[derive(Clone, Serialize, Deserialize)]
pub struct Resolved {
    pub params: ParameterSet,
    pub preset: Option<String>,
    pub s0: State,
    pub variant: ModelVariant,
    pub integrator: IntegratorConfig,
}

pub fn run(args: Args) -> Result<(), Failure> {
    args.out.init_threads();
    let resolved: Resolved = match args.out.load_manifest("simulate")? {
        Some(r) => r,
        None => {
            let (params, preset) = args.model.resolve()?;
            Resolved {
                params,
                preset,
                s0: args.s0,
                variant: args.variant,
                integrator: IntegratorConfig {
                    scheme: args.scheme,
                    dt: args.dt,
                    abs_tol: args.abs_tol,
                    rel_tol: args.rel_tol,
                    t_end: args.t_end,
                    transient: args.transient,
                    record_stride: args.stride,
                    ..IntegratorConfig::default()
                },
            }
        }
    };

    let traj = integrate(&resolved.params, resolved.s0, &resolved.integrator, resolved.variant)
        .map_err(runtime_err)?;

    let rows = traj.times.iter().zip(&traj.states).map(|(t, s)| {
        format!(
            "{},{},{},{},{}",
            fmt_f64(*t),
            fmt_f64(s.0[0]),
            fmt_f64(s.0[1]),
            fmt_f64(s.0[2]),
            fmt_f64(s.0[3])
        )
    });
    write_csv(&args.out.out_dir, "trajectory.csv", "t,N,E,R,A", rows)?;

    let mut manifest = RunManifest::new(
        TOOL_VERSION,
        "simulate",
        serde_json::to_value(&resolved).map_err(runtime_err)?,
    );
    manifest.preset = resolved.preset.clone();
    manifest.outputs.push("trajectory.csv".into());
    write_manifest(&args.out.out_dir, &manifest)?;
    eprintln!(
        "simulate: {} recorded points, {} accepted / {} rejected steps, {} clamped",
        traj.len(),
        traj.meta.steps_accepted,
        traj.meta.steps_rejected,
        traj.meta.clamped
    );
    Ok(())
}
