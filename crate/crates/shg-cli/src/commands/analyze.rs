//! `shg analyze`: re-estimate correlations from saved snapshot streams.
//!
//! Each input file is treated as one trajectory; files are accumulated
//! independently and merged block-by-block in input order, so the result is
//! identical to the online estimate of the run that produced them. Pass the
//! run's own `resolved.toml` as `--config` to reuse its grid and parameters.

use super::simulate::{write_estimates, EnsembleStats};
use super::Ctx;
use crate::{CliError, CliResult, CommonArgs};
use serde_json::json;
use shg_core::estimators::{AutocorrDiagnostic, BlockedAccumulator};
use shg_core::grid::Spectral;
use shg_core::sim::read_snapshots;
use shg_core::{C64, Grid1D};
use std::path::PathBuf;

pub fn run(common: &CommonArgs, cli_inputs: &[PathBuf]) -> CliResult<()> {
    let mut ctx = Ctx::new("analyze", common)?;
    let inputs: Vec<PathBuf> = if cli_inputs.is_empty() {
        ctx.spec.analyze_inputs.clone()
    } else {
        cli_inputs.to_vec()
    };
    if inputs.is_empty() {
        return Err(CliError::Config(
            "no snapshot files to analyze; pass them as arguments or set [analyze] inputs"
                .into(),
        ));
    }

    let threshold = ctx.threshold()?;
    ctx.spec.resolve_pump(threshold.e_t);

    let mut merged: Option<(Grid1D, BlockedAccumulator)> = None;
    let mut inefficiency = 1.0_f64;
    let mut samples = 0_u64;
    let mut file_reports = Vec::new();
    for path in &inputs {
        let (header, snapshots) = read_snapshots(path)
            .map_err(|e| CliError::Run(format!("{}: {e}", path.display())))?;
        let grid = Grid1D::new(header.n as usize, header.length)?;
        if let Some((g0, _)) = &merged {
            if *g0 != grid {
                return Err(CliError::Run(format!(
                    "{}: grid {}x{} does not match the first input ({}x{})",
                    path.display(),
                    grid.n(),
                    grid.length(),
                    g0.n(),
                    g0.length()
                )));
            }
        }

        let mut spectral = Spectral::new(grid);
        let mut far1 = vec![C64::ZERO; grid.n()];
        let mut far2 = vec![C64::ZERO; grid.n()];
        let mut acc = BlockedAccumulator::new(
            &grid,
            header.n_th,
            ctx.spec.run.blocks,
            snapshots.len() as u64,
        )?;
        let mut diag = AutocorrDiagnostic::new(16);
        let probe = grid.mode_nearest(threshold.k_c);
        for snap in &snapshots {
            spectral.far_field_into(&snap.fields.a1, &mut far1);
            spectral.far_field_into(&snap.fields.a2, &mut far2);
            acc.push(&far1, &far2)?;
            diag.push(far1[probe].norm_sqr());
        }
        samples += snapshots.len() as u64;
        let tau = diag.tau_int();
        if tau.is_finite() {
            inefficiency = inefficiency.max(tau);
        }
        file_reports.push(json!({
            "path": path.display().to_string(),
            "snapshots": snapshots.len(),
            "seed": header.seed,
            "dt": header.dt,
            "stride": header.stride,
            "n_th": header.n_th,
        }));

        merged = Some(match merged {
            None => (grid, acc),
            Some((g0, mut all)) => {
                all.merge_blockwise(&acc)?;
                (g0, all)
            }
        });
    }

    let (grid, acc) = merged.expect("at least one input was read");
    let probe = grid.mode_nearest(threshold.k_c);
    let stats = EnsembleStats {
        trajectories: inputs.len() as u64,
        steps_per_trajectory: 0,
        samples,
        inefficiency,
        n_effective: samples as f64 / inefficiency,
        max_sh_modulus: f64::NAN,
        critical_mode: probe,
        critical_wavenumber: grid.wavenumber(probe),
    };
    let view = acc.jackknife()?;
    write_estimates(&mut ctx, &view, &grid, stats.n_effective)?;

    ctx.finish(json!({
        "threshold": threshold,
        "inputs": file_reports,
        "ensemble": stats,
    }))
}
