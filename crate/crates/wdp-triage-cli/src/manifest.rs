//! Run manifests. Every output directory gets exactly one `manifest.json`
//! recording what produced it: tool version, subcommand, the full effective
//! configuration, seeds, and input/output paths. Re-running the subcommand
//! with the recorded configuration reproduces the data files byte for byte;
//! only `wall_time_ms` varies between runs.

use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult, Code};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub seeds: Vec<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Effective configuration after defaults and flag overrides.
    pub config: serde_json::Value,
    pub wall_time_ms: u64,
    /// Set only when a pipeline aborted; names the stage that failed.
    pub failed_stage: Option<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: serde_json::Value) -> RunManifest {
        RunManifest {
            tool: "wdp-triage",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            config,
            wall_time_ms: 0,
            failed_stage: None,
        }
    }
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> CliResult<()> {
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::new(Code::Json, format!("manifest: {e}")))?;
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
}
