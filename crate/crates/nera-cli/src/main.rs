//! Batch CLI for the predator-prey drug-consumption model.
//!
//! Exit codes: 0 on success, 1 on numerical failures (the failing sample is
//! identified on stderr), 2 on configuration errors (with a line/field
//! diagnostic).

mod commands;
mod opts;
mod output;

use clap::Parser;

use commands::{bifurcate, calibrate, equilibria, lyapunov, reproduce, simulate, stability};
use opts::Failure;

#[derive(Parser)]
#[command(
    name = "nera",
    version,
    about = "Predator-prey NERA model of illicit drug consumption: simulation, \
             equilibria, stability, Lyapunov spectra, bifurcation sweeps, GA calibration",
    propagate_version = true
)]
enum Cli {
    /// Integrate the model and write the trajectory as CSV
    Simulate(simulate::Args),
    /// Closed-form and numerically found fixed points
    Equilibria(equilibria::Args),
    /// Eigenvalues and stability class at one equilibrium
    Stability(stability::Args),
    /// Lyapunov spectrum and attractor classification
    Lyapunov(lyapunov::Args),
    /// Sweep beta1 and emit the bifurcation diagram and regime boundaries
    Bifurcate(bifurcate::Args),
    /// Fit the ten free parameters to observed prevalence data with a GA
    Calibrate(calibrate::Args),
    /// Full pipeline for a preset: equilibria, stability, sweep, boundaries,
    /// reference-point Lyapunov spectra
    Reproduce(reproduce::Args),
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let result = match cli {
        Cli::Simulate(args) => simulate::run(args),
        Cli::Equilibria(args) => equilibria::run(args),
        Cli::Stability(args) => stability::run(args),
        Cli::Lyapunov(args) => lyapunov::run(args),
        Cli::Bifurcate(args) => bifurcate::run(args),
        Cli::Calibrate(args) => calibrate::run(args),
        Cli::Reproduce(args) => reproduce::run(args),
    };
    match result {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            std::process::ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            std::process::ExitCode::from(1)
        }
    }
}
