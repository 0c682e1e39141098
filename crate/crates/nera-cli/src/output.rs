//! CSV and manifest writing.

use std::io::Write;
use std::path::{Path, PathBuf};

use nera::manifest::RunManifest;

use crate::opts::{runtime_err, Failure};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest round-trip formatting, so re-runs are byte-identical.
pub fn fmt_f64(x: f64) -> String {
    x.to_string()
}

pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(dir).map_err(runtime_err)?;
    let path = dir.join(name);
    let file = std::fs::File::create(&path)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "{header}").map_err(runtime_err)?;
    for row in rows {
        writeln!(out, "{row}").map_err(runtime_err)?;
    }
    out.flush().map_err(runtime_err)?;
    Ok(path)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(dir).map_err(runtime_err)?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Write `manifest.json` next to the outputs it describes.
pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(runtime_err)?;
    let path = dir.join("manifest.json");
    std::fs::write(&path, manifest.to_json_pretty())
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}
