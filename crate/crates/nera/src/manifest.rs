//! Run manifests: every CLI output directory gets a JSON manifest with the
//! fully resolved configuration, so any result can be reproduced from the
//! manifest alone.

use serde::{Deserialize, Serialize};
use std::time::{SystemTime, UNIX_EPOCH};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub schema_version: u32,
    pub subcommand: String,
    pub preset: Option<String>,
    pub config_path: Option<String>,
    pub rng_seed: Option<u64>,
    pub timestamp_unix: u64,
    /// Fully resolved subcommand configuration (all defaults materialized).
    pub resolved: serde_json::Value,
    /// Files written by the run, relative to the manifest's directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(version: &str, subcommand: &str, resolved: serde_json::Value) -> Self {
        RunManifest {
            tool: "nera".to_string(),
            version: version.to_string(),
            schema_version: MANIFEST_SCHEMA_VERSION,
            subcommand: subcommand.to_string(),
            preset: None,
            config_path: None,
            rng_seed: None,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            resolved,
            outputs: Vec::new(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let mut m = RunManifest::new("0.1.0", "simulate", serde_json::json!({"dt": 0.01}));
        m.preset = Some("colorado".into());
        m.outputs.push("trajectory.csv".into());
        let again = RunManifest::from_json(&m.to_json_pretty()).unwrap();
        assert_eq!(again.subcommand, "simulate");
        assert_eq!(again.preset.as_deref(), Some("colorado"));
        assert_eq!(again.resolved["dt"], serde_json::json!(0.01));
    }

    #[test]
    fn rejects_malformed_json() {
        assert!(RunManifest::from_json("{not json").is_err());
    }
}
