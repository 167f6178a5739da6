//! JSON run manifest: full parameter echo, provenance, wall time.
//!
//! Together with `resolved.toml` (the re-runnable configuration echo) the
//! manifest makes every invocation reproducible: same binary + same
//! resolved.toml + same seed → byte-identical data files.

use crate::config::JobSpec;
use crate::{CliError, CliResult};
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub tool_version: &'a str,
    pub seed: u64,
    pub threads: Option<usize>,
    pub wall_time_seconds: f64,
    /// Fully resolved configuration (every default explicit).
    pub config: &'a JobSpec,
    /// Data files written, relative to the manifest location.
    pub outputs: &'a [String],
    /// Command-specific payload (threshold values, run statistics, checks).
    pub details: serde_json::Value,
}

pub fn write(dir: &Path, manifest: &Manifest<'_>) -> CliResult<()> {
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::Run(format!("manifest serialization: {e}")))?;
    std::fs::write(&path, text)
        .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

pub fn write_resolved(dir: &Path, spec: &JobSpec) -> CliResult<()> {
    let path = dir.join("resolved.toml");
    std::fs::write(&path, spec.resolved_toml())
        .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}
