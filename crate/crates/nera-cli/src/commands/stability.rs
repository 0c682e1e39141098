use serde::{Deserialize, Serialize};

use nera::equilibria::{closed_form_equilibria, find_i3, EquilibriumLabel, EquilibriumReport};
use nera::manifest::RunManifest;
use nera::model::State;
use nera::params::ParameterSet;
use nera::stability::{eigenvalues_at, StabilityReport};

use crate::opts::{config_err, parse_state, runtime_err, Failure, ModelOpts, OutputOpts};
use crate::output::{fmt_f64, write_csv, write_manifest, TOOL_VERSION};

pub const STABILITY_HEADER: &str = "label,index,re,im,class,margin";

#[derive(clap::Args)]
pub struct Args {
    #[command(flatten)]
    model: ModelOpts,
    #[command(flatten)]
    out: OutputOpts,
    /// Which equilibrium to analyze
    #[arg(long)]
    label: EquilibriumLabel,
    /// Newton seed for I3 as `N,E,R,A` (A must be 0)
    #[arg(long, value_parser = parse_state, default_value = "0.1,0.1,0.1,0")]
    seed: State,
}

#[derive(Clone, Serialize, Deserialize)]
pub struct Resolved {
    pub params: ParameterSet,
    pub preset: Option<String>,
    pub label: String,
    pub seed: State,
}

pub fn equilibrium_for_label(
    params: &ParameterSet,
    label: EquilibriumLabel,
    seed: State,
) -> Result<EquilibriumReport, Failure> {
    match label {
        EquilibriumLabel::O | EquilibriumLabel::I1 | EquilibriumLabel::I2 | EquilibriumLabel::J2 => {
            closed_form_equilibria(params)
                .into_iter()
                .find(|r| r.label == label)
                .ok_or_else(|| Failure::Runtime("closed forms are always reported".into()))
        }
        EquilibriumLabel::I3 => {
            let rep = find_i3(params, seed).map_err(runtime_err)?;
            if !rep.converged {
                return Err(Failure::Runtime(format!(
                    "I3 search did not converge (residual {:.3e} after {} iterations)",
                    rep.residual, rep.iterations
                )));
            }
            Ok(rep)
        }
        EquilibriumLabel::Numeric => Err(Failure::Config(
            "`numeric` is not a selectable label; use equilibria for the full list".into(),
        )),
    }
}

pub fn csv_rows(rep: &StabilityReport) -> Vec<String> {
    rep.eigenvalues
        .iter()
        .enumerate()
        .map(|(i, l)| {
            format!(
                "{},{},{},{},{},{}",
                rep.equilibrium.label.name(),
                i,
                fmt_f64(l.re),
                fmt_f64(l.im),
                rep.class.name(),
                fmt_f64(rep.margin)
            )
        })
        .collect()
}

pub fn run(args: Args) -> Result<(), Failure> {
    args.out.init_threads();
    let resolved: Resolved = match args.out.load_manifest("stability")? {
        Some(r) => r,
        None => {
            let (params, preset) = args.model.resolve()?;
            Resolved {
                params,
                preset,
                label: args.label.name().to_string(),
                seed: args.seed,
            }
        }
    };
    let label: EquilibriumLabel = resolved.label.parse().map_err(config_err)?;
    let equilibrium = equilibrium_for_label(&resolved.params, label, resolved.seed)?;
    if !equilibrium.state.is_finite() {
        return Err(Failure::Runtime(format!(
            "{} is singular for these parameters",
            label.name()
        )));
    }
    let report = eigenvalues_at(&resolved.params, &equilibrium).map_err(runtime_err)?;

    let name = format!("stability_{}.csv", label.name());
    write_csv(
        &args.out.out_dir,
        &name,
        STABILITY_HEADER,
        csv_rows(&report).into_iter(),
    )?;

    let mut manifest = RunManifest::new(
        TOOL_VERSION,
        "stability",
        serde_json::to_value(&resolved).map_err(runtime_err)?,
    );
    manifest.preset = resolved.preset.clone();
    manifest.outputs.push(name);
    write_manifest(&args.out.out_dir, &manifest)?;
    eprintln!(
        "stability: {} is a {} (margin {:.3e})",
        label.name(),
        report.class.name(),
        report.margin
    );
    Ok(())
}
