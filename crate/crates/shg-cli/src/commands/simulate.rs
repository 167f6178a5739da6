//! `shg simulate`: stochastic field trajectories with online estimation.
//!
//! Runs `run.trajectories` independent seeded trajectories in parallel, each
//! feeding a blocked far-field moment accumulator; blocks are merged in
//! trajectory order, so results are independent of thread scheduling and
//! bit-exact across reruns. Per-observable estimate tables
//! (k, value, standard_error, n_effective) are written for every tracked
//! correlation family; raw snapshots go to `snapshots-NNN.bin` when
//! `run.save_snapshots = true`.

use super::Ctx;
use crate::config::{InitialKind, JobSpec};
use crate::output::write_estimate_csv;
use crate::{CliError, CliResult, CommonArgs};
use rayon::prelude::*;
use serde_json::json;
use shg_core::estimators::{
    AutocorrDiagnostic, BlockedAccumulator, Field, JackknifeView, Statistic,
};
use shg_core::grid::Spectral;
use shg_core::sim::{
    run_trajectory, InitialState, RunConfig, SnapshotHeader, SnapshotSink, SnapshotWriter,
};
use shg_core::{C64, FieldPair, Grid1D, ThresholdResult};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

/// Estimate files emitted per run: (file stem, statistic).
pub const ESTIMATE_FILES: [(&str, Statistic); 18] = [
    ("n1", Statistic::MeanPhoton(Field::Fundamental)),
    ("n2", Statistic::MeanPhoton(Field::SecondHarmonic)),
    ("cn11", Statistic::NumberCorrelation(Field::Fundamental)),
    ("cn22", Statistic::NumberCorrelation(Field::SecondHarmonic)),
    ("cn12_opp", Statistic::CrossNumberOpposite),
    ("cn12_same", Statistic::CrossNumberSame),
    ("c11_minus", Statistic::IntensityDifference(Field::Fundamental)),
    ("c11_plus", Statistic::IntensitySum(Field::Fundamental)),
    ("c22_minus", Statistic::IntensityDifference(Field::SecondHarmonic)),
    ("c22_plus", Statistic::IntensitySum(Field::SecondHarmonic)),
    ("c12_minus_opp", Statistic::CrossDifferenceOpposite),
    ("c12_plus_opp", Statistic::CrossSumOpposite),
    ("c12_minus_same", Statistic::CrossDifferenceSame),
    ("c12_plus_same", Statistic::CrossSumSame),
    (
        "cn11_zero",
        Statistic::NumberCorrelationFromZero(Field::Fundamental),
    ),
    (
        "cn22_zero",
        Statistic::NumberCorrelationFromZero(Field::SecondHarmonic),
    ),
    ("cn12_zero_to", Statistic::CrossNumberZeroTo),
    ("cn12_to_zero", Statistic::CrossNumberToZero),
];

/// Online consumer of one trajectory: far-field transform, blocked moment
/// accumulation, autocorrelation probe of the critical-mode intensity, and
/// optional raw snapshot persistence.
pub struct RecordingSink {
    spectral: Spectral,
    acc: BlockedAccumulator,
    diag: AutocorrDiagnostic,
    probe_mode: usize,
    far1: Vec<C64>,
    far2: Vec<C64>,
    writer: Option<SnapshotWriter<BufWriter<File>>>,
}

impl RecordingSink {
    pub fn new(
        grid: Grid1D,
        n_th: f64,
        blocks: usize,
        expected_pushes: u64,
        probe_mode: usize,
        writer: Option<SnapshotWriter<BufWriter<File>>>,
    ) -> CliResult<RecordingSink> {
        let n = grid.n();
        Ok(RecordingSink {
            spectral: Spectral::new(grid),
            acc: BlockedAccumulator::new(&grid, n_th, blocks, expected_pushes)?,
            diag: AutocorrDiagnostic::new(16),
            probe_mode,
            far1: vec![C64::ZERO; n],
            far2: vec![C64::ZERO; n],
            writer,
        })
    }

    pub fn into_parts(
        self,
    ) -> (
        BlockedAccumulator,
        AutocorrDiagnostic,
        Option<SnapshotWriter<BufWriter<File>>>,
    ) {
        (self.acc, self.diag, self.writer)
    }
}

impl SnapshotSink for RecordingSink {
    fn push(&mut self, time: f64, trajectory: u64, fields: &FieldPair) -> shg_core::Result<()> {
        if let Some(w) = &mut self.writer {
            w.push(time, trajectory, fields)?;
        }
        self.spectral.far_field_into(&fields.a1, &mut self.far1);
        self.spectral.far_field_into(&fields.a2, &mut self.far2);
        self.acc.push(&self.far1, &self.far2)?;
        self.diag.push(self.far1[self.probe_mode].norm_sqr());
        Ok(())
    }
}

/// Ensemble statistics carried into the manifest.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EnsembleStats {
    pub trajectories: u64,
    pub steps_per_trajectory: u64,
    pub samples: u64,
    /// Statistical inefficiency 1 + 2·Σρ of the critical-mode intensity.
    pub inefficiency: f64,
    pub n_effective: f64,
    pub max_sh_modulus: f64,
    pub critical_mode: usize,
    pub critical_wavenumber: f64,
}

fn initial_state(spec: &JobSpec) -> InitialState {
    match spec.run.initial {
        InitialKind::Vacuum => InitialState::Vacuum,
        InitialKind::Steady => InitialState::Steady,
        InitialKind::SteadyPerturbed => InitialState::SteadyPerturbed {
            mode: spec.run.perturbation_mode,
            amplitude: spec.run.perturbation_amplitude,
        },
    }
}

pub fn base_run_config(spec: &JobSpec, grid: Grid1D) -> RunConfig {
    RunConfig {
        params: spec.params,
        grid,
        dt: spec.run.dt,
        t_transient: spec.run.t_transient,
        t_total: spec.run.t_total,
        record_stride: spec.run.record_stride,
        seed: spec.run.seed,
        trajectory: 0,
        noise: spec.run.noise,
        initial: initial_state(spec),
    }
}

/// Run the configured ensemble and merge the accumulated moments.
///
/// Snapshot files are created in `snapshot_dir` when given. The pump must be
/// resolved before calling.
pub fn run_ensemble_accumulated(
    spec: &JobSpec,
    threshold: &ThresholdResult,
    snapshot_dir: Option<&Path>,
) -> CliResult<(BlockedAccumulator, EnsembleStats, Vec<PathBuf>)> {
    let grid = spec.grid()?;
    let base = base_run_config(spec, grid);
    let measure_steps = (spec.run.t_total / spec.run.dt).round() as u64;
    let expected = measure_steps.div_ceil(spec.run.record_stride);
    let probe_mode = grid.mode_nearest(threshold.k_c);

    let mut snapshot_paths = Vec::new();
    let mut jobs = Vec::new();
    for id in 0..spec.run.trajectories {
        let writer = match snapshot_dir {
            Some(dir) => {
                let path = dir.join(format!("snapshots-{id:03}.bin"));
                let cfg = RunConfig {
                    trajectory: id,
                    ..base.clone()
                };
                let header = SnapshotHeader::for_run(&cfg);
                let w = SnapshotWriter::create(&path, &header)?;
                snapshot_paths.push(path);
                Some(w)
            }
            None => None,
        };
        let sink = RecordingSink::new(
            grid,
            spec.params.n_th,
            spec.run.blocks,
            expected,
            probe_mode,
            writer,
        )?;
        jobs.push((id, sink));
    }

    let results: shg_core::Result<Vec<_>> = jobs
        .into_par_iter()
        .map(|(id, mut sink)| {
            let cfg = RunConfig {
                trajectory: id,
                ..base.clone()
            };
            let summary = run_trajectory(&cfg, &mut sink)?;
            Ok((summary, sink))
        })
        .collect();
    let results = results?;

    let mut merged: Option<BlockedAccumulator> = None;
    let mut inefficiency = 1.0_f64;
    let mut samples = 0;
    let mut max_sh = 0.0_f64;
    let mut steps = 0;
    for (summary, sink) in results {
        samples += summary.recorded;
        max_sh = max_sh.max(summary.max_sh_modulus);
        steps = summary.steps;
        let (acc, diag, writer) = sink.into_parts();
        if let Some(w) = writer {
            w.finish()?;
        }
        let tau = diag.tau_int();
        if tau.is_finite() {
            inefficiency = inefficiency.max(tau);
        }
        merged = Some(match merged {
            None => acc,
            Some(mut all) => {
                all.merge_blockwise(&acc)?;
                all
            }
        });
    }
    let merged = merged.ok_or_else(|| CliError::Run("no trajectories were run".into()))?;

    let stats = EnsembleStats {
        trajectories: spec.run.trajectories,
        steps_per_trajectory: steps,
        samples,
        inefficiency,
        n_effective: samples as f64 / inefficiency,
        max_sh_modulus: max_sh,
        critical_mode: probe_mode,
        critical_wavenumber: grid.wavenumber(probe_mode),
    };
    Ok((merged, stats, snapshot_paths))
}

/// Emit the per-observable estimate tables for modes 0..n/2.
///
/// Estimates whose ordered variance sits below the sampling floor (deep
/// shot-noise tails) produce blank value/error cells rather than aborting.
pub fn write_estimates(
    ctx: &mut Ctx,
    view: &JackknifeView,
    grid: &Grid1D,
    n_effective: f64,
) -> CliResult<()> {
    let half = grid.n() / 2;
    for (stem, stat) in ESTIMATE_FILES {
        let mut rows = Vec::with_capacity(half);
        for mode in 0..half {
            let k = grid.wavenumber(mode);
            match view.estimate(stat, mode) {
                Ok(est) => rows.push((k, est.value, est.se)),
                Err(_) => rows.push((k, f64::NAN, f64::NAN)),
            }
        }
        let path = ctx.path(&format!("{stem}.csv"));
        write_estimate_csv(&path, &rows, n_effective)?;
    }
    Ok(())
}

pub fn run(common: &CommonArgs) -> CliResult<()> {
    let mut ctx = Ctx::new("simulate", common)?;
    let threshold = ctx.threshold()?;
    ctx.spec.resolve_pump(threshold.e_t);
    ctx.spec.params.validate()?;

    let snapshot_dir = if ctx.spec.run.save_snapshots {
        Some(ctx.out_dir.clone())
    } else {
        None
    };
    let (merged, stats, snapshot_paths) =
        run_ensemble_accumulated(&ctx.spec, &threshold, snapshot_dir.as_deref())?;
    for p in &snapshot_paths {
        if let Some(name) = p.file_name().and_then(|s| s.to_str()) {
            ctx.path(name);
        }
    }

    let grid = ctx.spec.grid()?;
    let view = merged.jackknife()?;
    write_estimates(&mut ctx, &view, &grid, stats.n_effective)?;

    let pump = ctx.spec.params.pump;
    ctx.finish(json!({
        "threshold": threshold,
        "pump": pump,
        "pump_over_threshold": pump / threshold.e_t,
        "ensemble": stats,
    }))
}
