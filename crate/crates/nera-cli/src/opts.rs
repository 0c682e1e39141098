//! Shared CLI options and error-to-exit-code plumbing.

use std::path::{Path, PathBuf};

use nera::manifest::RunManifest;
use nera::model::State;
use nera::params::ParameterSet;

/// Distinguishes exit code 2 (configuration) from exit code 1 (numerics).
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

pub fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

pub fn runtime_err(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

#[derive(clap::Args, Clone)]
pub struct OutputOpts {
    /// Directory for output files and the run manifest
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads for parallel sections (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Re-run from a previous manifest, ignoring the other options
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

impl OutputOpts {
    pub fn init_threads(&self) {
        if let Some(n) = self.threads {
            // Ignore the error if a global pool already exists.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }

    /// Load the resolved config of a prior run of `subcommand`.
    pub fn load_manifest<T: serde::de::DeserializeOwned>(
        &self,
        subcommand: &str,
    ) -> Result<Option<T>, Failure> {
        let Some(path) = &self.manifest else {
            return Ok(None);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        let manifest = RunManifest::from_json(&text)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        if manifest.subcommand != subcommand {
            return Err(Failure::Config(format!(
                "manifest {} was written by `{}`, not `{subcommand}`",
                path.display(),
                manifest.subcommand
            )));
        }
        let resolved = serde_json::from_value(manifest.resolved)
            .map_err(|e| Failure::Config(format!("{}: resolved config: {e}", path.display())))?;
        Ok(Some(resolved))
    }
}

#[derive(clap::Args, Clone)]
pub struct ModelOpts {
    /// Bundled parameter preset
    #[arg(long, value_parser = ParameterSet::PRESET_NAMES)]
    pub preset: Option<String>,
    /// Flat key-value parameter config file (beta1..beta4, r1..r3, alpha1,
    /// alpha2, gamma1, h)
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
}

impl ModelOpts {
    /// Resolve the parameter set; exactly one source must be given.
    pub fn resolve(&self) -> Result<(ParameterSet, Option<String>), Failure> {
        match (&self.preset, &self.config) {
            (Some(name), None) => {
                let p = ParameterSet::preset(name)
                    .ok_or_else(|| Failure::Config(format!("unknown preset `{name}`")))?;
                Ok((p, Some(name.clone())))
            }
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                let p = ParameterSet::from_config_str(&text)
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                Ok((p, None))
            }
            (None, None) => Err(Failure::Config(
                "one of --preset or --config is required".into(),
            )),
            (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
        }
    }
}

/// `N,E,R,A` comma-separated state argument.
pub fn parse_state(s: &str) -> Result<State, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("expected 4 comma-separated values, got {}", parts.len()));
    }
    let mut out = [0.0; 4];
    for (i, part) in parts.iter().enumerate() {
        out[i] = part
            .trim()
            .parse::<f64>()
            .map_err(|_| format!("invalid number `{part}`"))?;
        if !out[i].is_finite() || out[i] < 0.0 {
            return Err(format!("state components must be finite and >= 0, got `{part}`"));
        }
    }
    Ok(State(out))
}

/// `lo:hi` range argument.
#[derive(Clone, Copy, Debug)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

pub fn parse_range(s: &str) -> Result<Range, String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| "expected `lo:hi`".to_string())?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("invalid number `{lo}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("invalid number `{hi}`"))?;
    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
        return Err("range requires 0 < lo < hi".to_string());
    }
    Ok(Range { lo, hi })
}

pub fn read_to_string(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}
