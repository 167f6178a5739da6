//! Command implementations and the shared invocation context.

pub mod analyze;
pub mod bifurcation;
pub mod figures;
pub mod linear_corr;
pub mod simulate;
pub mod steady;

use crate::config::{self, JobSpec};
use crate::{manifest, output, CliError, CliResult, CommonArgs};
use shg_core::ThresholdResult;
use std::path::PathBuf;
use std::time::Instant;

/// Per-invocation state: resolved spec, output registry, wall clock.
pub struct Ctx {
    pub spec: JobSpec,
    pub out_dir: PathBuf,
    outputs: Vec<String>,
    started: Instant,
    threads: Option<usize>,
    command: &'static str,
}

impl Ctx {
    pub fn new(command: &'static str, common: &CommonArgs) -> CliResult<Ctx> {
        let (_, mut spec) = config::load(common.config.as_deref())?;
        if let Some(seed) = common.seed {
            spec.run.seed = seed;
        }
        if spec.run.seed > i64::MAX as u64 {
            return Err(CliError::Config(format!(
                "seed {} exceeds the configuration integer range (max {})",
                spec.run.seed,
                i64::MAX
            )));
        }
        let out_dir = output::resolve_out_dir(
            command,
            common.out.as_deref(),
            spec.output_directory.as_deref(),
        );
        output::ensure_dir(&out_dir)?;
        Ok(Ctx {
            spec,
            out_dir,
            outputs: Vec::new(),
            started: Instant::now(),
            threads: common.threads,
            command,
        })
    }

    /// Register a data file and return its full path.
    pub fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out_dir.join(name)
    }

    /// Compute the instability threshold for the configured operating point.
    pub fn threshold(&self) -> CliResult<ThresholdResult> {
        let probe = self.spec.params.with_pump(0.0);
        Ok(shg_core::find_threshold(&probe, &self.spec.threshold_search())?)
    }

    /// Resolve a fractional pump against the threshold; returns the threshold
    /// when one had to be computed.
    pub fn resolve_pump(&mut self) -> CliResult<Option<ThresholdResult>> {
        if self.spec.absolute_pump().is_some() {
            self.spec.params.validate()?;
            return Ok(None);
        }
        let t = self.threshold()?;
        self.spec.resolve_pump(t.e_t);
        self.spec.params.validate()?;
        Ok(Some(t))
    }

    /// Write `resolved.toml` + `manifest.json` and close the invocation.
    pub fn finish(self, details: serde_json::Value) -> CliResult<()> {
        manifest::write_resolved(&self.out_dir, &self.spec)?;
        let m = manifest::Manifest {
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION"),
            seed: self.spec.run.seed,
            threads: self.threads,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            config: &self.spec,
            outputs: &self.outputs,
            details,
        };
        manifest::write(&self.out_dir, &m)?;
        println!(
            "shg {}: wrote {} data file(s) to {}",
            self.command,
            self.outputs.len(),
            self.out_dir.display()
        );
        Ok(())
    }
}
