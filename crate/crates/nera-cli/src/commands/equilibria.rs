use serde::{Deserialize, Serialize};

use nera::equilibria::{closed_form_equilibria, find_all_numeric, EquilibriumReport, SeedGrid};
use nera::manifest::RunManifest;
use nera::params::ParameterSet;

use crate::opts::{runtime_err, Failure, ModelOpts, OutputOpts};
use crate::output::{fmt_f64, write_csv, write_manifest, TOOL_VERSION};

pub const EQUILIBRIA_HEADER: &str = "label,N,E,R,A,residual,feasible,conditions";

#[derive(clap::Args)]
pub struct Args {
    #[command(flatten)]
    model: ModelOpts,
    #[command(flatten)]
    out: OutputOpts,
    /// Seeds per axis for the numeric grid search
    #[arg(long, default_value_t = 5)]
    grid: usize,
    /// Skip the grid search and report only the closed forms
    #[arg(long)]
    no_numeric: bool,
}

#[derive(Clone, Serialize, Deserialize)]
pub struct Resolved {
    pub params: ParameterSet,
    pub preset: Option<String>,
    pub grid: Option<usize>,
}

pub fn csv_row(rep: &EquilibriumReport) -> String {
    let conditions = rep
        .conditions
        .iter()
        .map(|c| format!("{}={}", c.name.replace(' ', ""), if c.pass { "pass" } else { "fail" }))
        .collect::<Vec<_>>()
        .join(";");
    format!(
        "{},{},{},{},{},{},{},{}",
        rep.label.name(),
        fmt_f64(rep.state.0[0]),
        fmt_f64(rep.state.0[1]),
        fmt_f64(rep.state.0[2]),
        fmt_f64(rep.state.0[3]),
        fmt_f64(rep.residual),
        rep.feasible,
        conditions
    )
}

/// Closed forms first, then numeric finds that are not duplicates of them.
pub fn collect_reports(params: &ParameterSet, grid: Option<usize>) -> (Vec<EquilibriumReport>, usize) {
    let mut reports = closed_form_equilibria(params);
    let mut failed = 0;
    if let Some(points) = grid {
        let search = find_all_numeric(
            params,
            SeedGrid {
                points_per_axis: points,
                ..SeedGrid::default()
            },
        );
        failed = search.failed_seeds;
        for rep in search.reports {
            let dup = reports.iter().any(|r| {
                r.state.is_finite() && r.state.distance_max(&rep.state) < 1e-6
            });
            if !dup {
                reports.push(rep);
            }
        }
    }
    (reports, failed)
}

pub fn run(args: Args) -> Result<(), Failure> {
    args.out.init_threads();
    let resolved: Resolved = match args.out.load_manifest("equilibria")? {
        Some(r) => r,
        None => {
            let (params, preset) = args.model.resolve()?;
            Resolved {
                params,
                preset,
                grid: (!args.no_numeric).then_some(args.grid),
            }
        }
    };

    let (reports, failed_seeds) = collect_reports(&resolved.params, resolved.grid);
    write_csv(
        &args.out.out_dir,
        "equilibria.csv",
        EQUILIBRIA_HEADER,
        reports.iter().map(csv_row),
    )?;

    for rep in &reports {
        if let Some(note) = &rep.note {
            eprintln!("{}: {note}", rep.label.name());
        }
    }
    if failed_seeds > 0 {
        eprintln!("equilibria: {failed_seeds} grid seeds did not converge (dropped)");
    }

    let mut manifest = RunManifest::new(
        TOOL_VERSION,
        "equilibria",
        serde_json::to_value(&resolved).map_err(runtime_err)?,
    );
    manifest.preset = resolved.preset.clone();
    manifest.outputs.push("equilibria.csv".into());
    write_manifest(&args.out.out_dir, &manifest)?;
    Ok(())
}
