//! `shg reproduce-figure`: regenerate the data set behind each published
//! figure (ids 2–13) and verify it against frozen reference values.
//!
//! Every figure gets its own subdirectory `figure-NN` with the data files,
//! a `summary.txt` of PASS/FAIL lines, `resolved.toml` and `manifest.json`.
//! Figure-specific run settings are injected as *defaults*: anything set
//! explicitly in `--config` wins. With `--self-check`, a failed check makes
//! the process exit with code 4 after all artifacts are written.

use super::simulate::{base_run_config, run_ensemble_accumulated, write_estimates, EnsembleStats};
use super::{bifurcation, linear_corr, Ctx};
use crate::config::{self, InitialKind, RawConfig};
use crate::output::{ensure_dir, fmt, resolve_out_dir, write_csv};
use crate::{CliError, CliResult, CommonArgs};
use rayon::prelude::*;
use serde_json::json;
use shg_core::estimators::{Field, JackknifeView, Statistic};
use shg_core::grid::Spectral;
use shg_core::sim::{run_trajectory, RunConfig, SnapshotSink};
use shg_core::{
    correlation_spectrum, predict, predict_k0, steady_states, C64, CorrelationPrediction,
    FieldPair, Grid1D, InstabilityKind, ScanPoint, SteadyState, ThresholdResult,
};
use std::time::Instant;

// Reference values of the standard operating point Δ1 = 2, Δ2 = −2, γ = 0.5,
// regenerable with `shg bifurcation` / `shg linear-corr`. The critical
// wavenumber disagrees with the value printed in the original figure captions
// (1.833); the discrepancy is reported next to the check.
const REF_THRESHOLD_PUMP: f64 = 7.481757109268358;
const REF_CRITICAL_K: f64 = 1.8290740953921558;
const PUBLISHED_CRITICAL_K: f64 = 1.833;
const REF_SH_MODULUS_AT_THRESHOLD: f64 = 1.177666720669;

// Linearized observables of the (k_c, −k_c) pair at E = 0.99·E_t.
const REF_C11_MINUS_099: f64 = 0.603720;
const REF_C11_PLUS_099: f64 = 35.632817;
const REF_C22_MINUS_099: f64 = 0.928871;
const REF_C22_PLUS_099: f64 = 13.068741;
const REF_C12_MINUS_OPP_099: f64 = 6.212051;
const REF_C12_PLUS_OPP_099: f64 = 24.253557;
const REF_C12_MINUS_SAME_099: f64 = 6.388651;
const REF_C12_PLUS_SAME_099: f64 = 24.076957;

// Photon-number correlations at k_c for E = 0.9·E_t.
const REF_CN11_09: f64 = 0.752661;
const REF_CN12_OPP_09: f64 = 0.498828;
const REF_CN22_09: f64 = 0.349693;

// Homogeneous-mode cross correlation at E = 0.99·E_t.
const REF_CN12_K0_099: f64 = -0.207995;

// Linearized cn11(k_c) at E = 0.999·E_t: an upper reference that the
// patterned state above threshold must stay below.
const REF_CN11_0999: f64 = 0.996556;

/// PASS/FAIL recorder for one figure reproduction.
struct Checks {
    lines: Vec<String>,
    passed: usize,
    failed: usize,
}

impl Checks {
    fn new(figure: u32, title: &str) -> Checks {
        Checks {
            lines: vec![format!("figure {figure:02}: {title}")],
            passed: 0,
            failed: 0,
        }
    }

    fn record(&mut self, pass: bool, label: &str, detail: String) {
        if pass {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        let verdict = if pass { "PASS" } else { "FAIL" };
        self.lines.push(format!("{verdict}: {label}: {detail}"));
    }

    fn note(&mut self, text: String) {
        self.lines.push(format!("note: {text}"));
    }

    fn all_pass(&self) -> bool {
        self.failed == 0
    }

    fn render(&self) -> String {
        let verdict = if self.all_pass() { "PASS" } else { "FAIL" };
        let mut out = self.lines.join("\n");
        out.push_str(&format!(
            "\nresult: {verdict} ({}/{} checks)\n",
            self.passed,
            self.passed + self.failed
        ));
        out
    }
}

fn close(measured: f64, reference: f64, tol: f64) -> bool {
    (measured - reference).abs() <= tol
}

fn rel_close(measured: f64, reference: f64, rel: f64) -> bool {
    (measured - reference).abs() <= rel * reference.abs()
}

fn vs(measured: f64, reference: f64, tol_text: &str) -> String {
    format!("measured {measured:.6}, reference {reference:.6} ({tol_text})")
}

/// Fill figure-specific run settings into every knob the user left unset.
fn inject_defaults(figure: u32, raw: &mut RawConfig) {
    fn d<T>(slot: &mut Option<T>, v: T) {
        if slot.is_none() {
            *slot = Some(v);
        }
    }
    let pump_free = raw.pump.is_none() && raw.pump_fraction.is_none();
    let frac = |raw: &mut RawConfig, f: f64| {
        if pump_free {
            raw.pump_fraction = Some(f);
        }
    };
    match figure {
        2 | 3 => {} // threshold scans run on the global defaults
        4 => {
            frac(raw, 1.01);
            d(&mut raw.grid_length, 102.84);
            d(&mut raw.dt, 2e-3);
            d(&mut raw.t_transient, 0.0);
            d(&mut raw.t_total, 1200.0);
            d(&mut raw.record_stride, 200_000);
            d(&mut raw.trajectories, 1);
            d(&mut raw.noise, false);
            d(&mut raw.initial, InitialKind::SteadyPerturbed);
            d(&mut raw.perturbation_mode, 30);
            d(&mut raw.perturbation_amplitude, 1e-3);
        }
        5 => {
            frac(raw, 0.9999);
            d(&mut raw.t_transient, 50.0);
            d(&mut raw.t_total, 400.0);
            d(&mut raw.record_stride, 50);
            d(&mut raw.trajectories, 8);
        }
        6 => {
            frac(raw, 0.99);
        }
        7 | 8 => {
            d(
                &mut raw.figure_fractions,
                vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.995, 0.999],
            );
        }
        9 | 10 | 11 => {
            frac(raw, 0.99);
        }
        12 => {
            frac(raw, 0.999999);
            d(&mut raw.n_th, 1e4);
            d(&mut raw.t_transient, 2000.0);
            d(&mut raw.t_total, 5000.0);
            d(&mut raw.record_stride, 25);
            d(&mut raw.trajectories, 4);
        }
        13 => {
            frac(raw, 1.05);
            d(&mut raw.grid_length, 102.84);
            d(&mut raw.t_transient, 500.0);
            d(&mut raw.t_total, 2500.0);
            d(&mut raw.record_stride, 50);
            d(&mut raw.trajectories, 4);
            d(&mut raw.initial, InitialKind::SteadyPerturbed);
            d(&mut raw.perturbation_mode, 30);
            d(&mut raw.perturbation_amplitude, 1e-3);
        }
        _ => {}
    }
}

fn title(figure: u32) -> &'static str {
    match figure {
        2 => "instability thresholds vs second-harmonic detuning",
        3 => "second-harmonic modulus at threshold vs detuning",
        4 => "deterministic transverse pattern above threshold",
        5 => "noise-sustained transverse precursor just below threshold",
        6 => "photon-number correlations below threshold: theory vs simulation",
        7 => "peak photon-number correlations vs pump",
        8 => "homogeneous-mode (k = 0) correlations vs pump",
        9 => "fundamental intensity sum/difference spectra below threshold",
        10 => "second-harmonic intensity sum/difference spectra below threshold",
        11 => "cross-field intensity sum/difference spectra below threshold",
        12 => "nonlinear cross-correlations with the homogeneous mode near threshold",
        13 => "correlations above threshold in the patterned state",
        _ => "unknown figure",
    }
}

pub fn run(common: &CommonArgs, figure: u32, self_check: bool) -> CliResult<()> {
    if !(2..=13).contains(&figure) {
        return Err(CliError::Config(format!(
            "no data figure with id {figure}; valid ids are 2 through 13"
        )));
    }

    let (mut raw, _) = config::load(common.config.as_deref())?;
    inject_defaults(figure, &mut raw);
    let mut spec = raw.resolve()?;
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
    let base = resolve_out_dir(
        "reproduce-figure",
        common.out.as_deref(),
        spec.output_directory.as_deref(),
    );
    let out_dir = base.join(format!("figure-{figure:02}"));
    ensure_dir(&out_dir)?;
    let mut ctx = Ctx {
        spec,
        out_dir,
        outputs: Vec::new(),
        started: Instant::now(),
        threads: common.threads,
        command: "reproduce-figure",
    };

    let mut checks = Checks::new(figure, title(figure));
    match figure {
        2 => fig_threshold_curves(&mut ctx, &mut checks)?,
        3 => fig_sh_at_threshold(&mut ctx, &mut checks)?,
        4 => fig_deterministic_pattern(&mut ctx, &mut checks)?,
        5 => fig_precursor(&mut ctx, &mut checks)?,
        6 => fig_number_correlations(&mut ctx, &mut checks)?,
        7 => fig_peaks_vs_pump(&mut ctx, &mut checks)?,
        8 => fig_k0_vs_pump(&mut ctx, &mut checks)?,
        9 | 10 | 11 => fig_spectra(&mut ctx, &mut checks, figure)?,
        12 => fig_nonlinear_near_threshold(&mut ctx, &mut checks)?,
        13 => fig_above_threshold(&mut ctx, &mut checks)?,
        _ => unreachable!(),
    }

    let text = checks.render();
    let path = ctx.path("summary.txt");
    std::fs::write(&path, &text)
        .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
    print!("{text}");

    let all_pass = checks.all_pass();
    let failed = checks.failed;
    ctx.finish(json!({
        "figure": figure,
        "title": title(figure),
        "self_check": self_check,
        "checks_passed": checks.passed,
        "checks_failed": checks.failed,
        "summary": checks.lines,
    }))?;

    if self_check && !all_pass {
        return Err(CliError::SelfCheck(format!(
            "figure {figure}: {failed} check(s) failed"
        )));
    }
    Ok(())
}

/// Scan point nearest to a detuning value.
fn point_at(points: &[ScanPoint], delta2: f64) -> Option<&ScanPoint> {
    points
        .iter()
        .min_by(|a, b| {
            (a.delta2 - delta2)
                .abs()
                .total_cmp(&(b.delta2 - delta2).abs())
        })
        .filter(|p| (p.delta2 - delta2).abs() < 1e-9)
}

fn fig_threshold_curves(ctx: &mut Ctx, checks: &mut Checks) -> CliResult<()> {
    let points = bifurcation::emit_scan(ctx)?;
    let Some(anchor) = point_at(&points, -2.0).and_then(|p| p.transverse.as_ref()) else {
        checks.record(
            false,
            "transverse threshold at Delta2 = -2",
            "scan range does not cover Delta2 = -2 or the search failed".into(),
        );
        return Ok(());
    };
    checks.record(
        close(anchor.e_t, REF_THRESHOLD_PUMP, 1e-5),
        "threshold pump at Delta2 = -2",
        vs(anchor.e_t, REF_THRESHOLD_PUMP, "tol 1e-5"),
    );
    checks.record(
        close(anchor.k_c, REF_CRITICAL_K, 1e-3),
        "critical wavenumber at Delta2 = -2",
        format!(
            "{}; originally printed value {PUBLISHED_CRITICAL_K} is inconsistent with this operating point",
            vs(anchor.k_c, REF_CRITICAL_K, "tol 1e-3")
        ),
    );
    checks.record(
        anchor.kind == InstabilityKind::StationaryTransverse && anchor.lambda_imag.abs() < 1e-6,
        "instability character at Delta2 = -2",
        format!(
            "kind {}, |Im lambda| = {:.2e} (stationary transverse expected)",
            bifurcation::kind_label(anchor.kind),
            anchor.lambda_imag.abs()
        ),
    );
    let found = points.iter().filter(|p| p.transverse.is_some()).count();
    checks.note(format!(
        "transverse threshold located at {found}/{} scan points",
        points.len()
    ));
    Ok(())
}

fn fig_sh_at_threshold(ctx: &mut Ctx, checks: &mut Checks) -> CliResult<()> {
    let points = bifurcation::emit_scan(ctx)?;
    let rows: Vec<(f64, &ThresholdResult, f64)> = points
        .iter()
        .filter_map(|p| {
            let t = p.transverse.as_ref()?;
            let sh = p.sh_modulus_at_threshold?;
            Some((p.delta2, t, sh))
        })
        .collect();
    let path = ctx.path("sh_at_threshold.csv");
    write_csv(
        &path,
        &["delta2", "e_t", "k_c", "sh_modulus", "kind"],
        rows.iter().map(|(d2, t, sh)| {
            vec![
                fmt(*d2),
                fmt(t.e_t),
                fmt(t.k_c),
                fmt(*sh),
                bifurcation::kind_label(t.kind).to_string(),
            ]
        }),
    )?;

    let sh_at = |d2: f64| {
        point_at(&points, d2)
            .and_then(|p| p.sh_modulus_at_threshold)
            .unwrap_or(f64::NAN)
    };
    let anchor = sh_at(-2.0);
    checks.record(
        close(anchor, REF_SH_MODULUS_AT_THRESHOLD, 1e-4),
        "second-harmonic modulus at threshold, Delta2 = -2",
        vs(anchor, REF_SH_MODULUS_AT_THRESHOLD, "tol 1e-4"),
    );
    checks.record(
        rows.iter().all(|(_, _, sh)| *sh < 2.0),
        "Q-representation validity at threshold",
        format!(
            "sh modulus stays below the limit 2 at all {} scan points",
            rows.len()
        ),
    );
    // The bound 2 is approached from below with growing second-harmonic
    // detuning. The curve dips where the critical branch switches from
    // stationary to oscillatory (near Delta2 ~ 0.4), so monotonic growth is
    // asserted beyond the exchange only.
    let monotone = rows
        .windows(2)
        .filter(|w| w[0].0 >= 1.0)
        .all(|w| w[1].2 >= w[0].2 - 1e-9);
    let edge = rows.last().map(|r| r.2).unwrap_or(f64::NAN);
    checks.record(
        monotone && edge > 1.85 && edge < 2.0,
        "approach to the limit 2 at large detuning",
        format!(
            "sh modulus grows monotonically for Delta2 >= 1, reaching {edge:.4} < 2 at the scan edge"
        ),
    );
    Ok(())
}

/// Far-field intensities |a_j(k)|² of a near-field pair.
fn far_intensities(grid: Grid1D, fields: &FieldPair) -> (Vec<f64>, Vec<f64>) {
    let mut sp = Spectral::new(grid);
    let mut far = vec![C64::ZERO; grid.n()];
    sp.far_field_into(&fields.a1, &mut far);
    let i1: Vec<f64> = far.iter().map(|a| a.norm_sqr()).collect();
    sp.far_field_into(&fields.a2, &mut far);
    let i2: Vec<f64> = far.iter().map(|a| a.norm_sqr()).collect();
    (i1, i2)
}

/// Bin order of ascending signed wavenumber.
fn signed_order(n: usize) -> impl Iterator<Item = usize> {
    (n / 2..n).chain(0..n / 2)
}

fn fig_deterministic_pattern(ctx: &mut Ctx, checks: &mut Checks) -> CliResult<()> {
    let threshold = ctx.threshold()?;
    ctx.spec.resolve_pump(threshold.e_t);
    ctx.spec.params.validate()?;
    let grid = ctx.spec.grid()?;
    let cfg = base_run_config(&ctx.spec, grid);
    let summary = run_trajectory(&cfg, &mut ())?;
    let fields = &summary.final_fields;

    let path = ctx.path("near_field.csv");
    write_csv(
        &path,
        &["x", "re_a1", "im_a1", "intensity1", "re_a2", "im_a2", "intensity2"],
        (0..grid.n()).map(|m| {
            let a1 = fields.a1[m];
            let a2 = fields.a2[m];
            vec![
                fmt(grid.position(m)),
                fmt(a1.re),
                fmt(a1.im),
                fmt(a1.norm_sqr()),
                fmt(a2.re),
                fmt(a2.im),
                fmt(a2.norm_sqr()),
            ]
        }),
    )?;

    let (i1, i2) = far_intensities(grid, fields);
    let path = ctx.path("far_field.csv");
    write_csv(
        &path,
        &["k", "intensity1", "intensity2"],
        signed_order(grid.n())
            .map(|m| vec![fmt(grid.wavenumber(m)), fmt(i1[m]), fmt(i2[m])]),
    )?;

    let n = grid.n();
    let mc = grid.mode_nearest(threshold.k_c);
    // Harmonic comb of the roll: background excludes bins within 1 of any
    // multiple of the critical mode.
    let near_comb = |m: usize| {
        (0..=4).any(|j| {
            let c = (j * mc) % n;
            let d = m.abs_diff(c).min(n - m.abs_diff(c));
            d <= 1 || {
                let c2 = (n - c) % n;
                let d2 = m.abs_diff(c2).min(n - m.abs_diff(c2));
                d2 <= 1
            }
        })
    };
    let background = (0..n)
        .filter(|&m| !near_comb(m))
        .map(|m| i1[m])
        .fold(f64::MIN_POSITIVE, f64::max);
    let peak = i1[mc].min(i1[grid.opposite_mode(mc)]);
    checks.record(
        peak >= 1e3 * background,
        "far-field peaks at the critical wavenumber",
        format!(
            "intensity at k = ±{:.4} is {:.3e}, off-comb background {:.3e} (ratio {:.1e} >= 1e3)",
            grid.wavenumber(mc),
            peak,
            background,
            peak / background
        ),
    );
    let argmax = (1..n / 2).max_by(|&a, &b| i1[a].total_cmp(&i1[b])).unwrap();
    checks.record(
        argmax.abs_diff(mc) <= 1,
        "dominant transverse mode",
        format!("mode {argmax} (critical mode {mc} ± 1)"),
    );
    let max_sh = fields.a2.iter().map(|a| a.norm()).fold(0.0, f64::max);
    checks.record(
        max_sh < 2.0,
        "Q-representation validity of the patterned state",
        format!("max |A2| = {max_sh:.4} < 2"),
    );
    checks.note(format!(
        "pump {:.6} = {:.4} x threshold {:.6}",
        ctx.spec.params.pump,
        ctx.spec.params.pump / threshold.e_t,
        threshold.e_t
    ));
    Ok(())
}

/// Accumulates time-averaged far-field intensities; trajectory 0 also keeps
/// decimated near-field rows for the space-time picture.
struct MeanSpectrumSink {
    spectral: Spectral,
    far: Vec<C64>,
    sum1: Vec<f64>,
    sum2: Vec<f64>,
    count: u64,
    rows: Option<Vec<(f64, Vec<f64>)>>,
    row_every: u64,
    pushes: u64,
}

impl MeanSpectrumSink {
    fn new(grid: Grid1D, keep_rows: bool, row_every: u64) -> MeanSpectrumSink {
        let n = grid.n();
        MeanSpectrumSink {
            spectral: Spectral::new(grid),
            far: vec![C64::ZERO; n],
            sum1: vec![0.0; n],
            sum2: vec![0.0; n],
            count: 0,
            rows: keep_rows.then(Vec::new),
            row_every: row_every.max(1),
            pushes: 0,
        }
    }
}

impl SnapshotSink for MeanSpectrumSink {
    fn push(&mut self, time: f64, _trajectory: u64, fields: &FieldPair) -> shg_core::Result<()> {
        self.spectral.far_field_into(&fields.a1, &mut self.far);
        for (s, v) in self.sum1.iter_mut().zip(&self.far) {
            *s += v.norm_sqr();
        }
        self.spectral.far_field_into(&fields.a2, &mut self.far);
        for (s, v) in self.sum2.iter_mut().zip(&self.far) {
            *s += v.norm_sqr();
        }
        self.count += 1;
        if let Some(rows) = &mut self.rows {
            if self.pushes % self.row_every == 0 {
                let re: Vec<f64> = fields.a1.iter().map(|a| a.re).collect();
                let mean = re.iter().sum::<f64>() / re.len() as f64;
                rows.push((time, re.iter().map(|r| r - mean).collect()));
            }
        }
        self.pushes += 1;
        Ok(())
    }
}

fn fig_precursor(ctx: &mut Ctx, checks: &mut Checks) -> CliResult<()> {
    let threshold = ctx.threshold()?;
    ctx.spec.resolve_pump(threshold.e_t);
    ctx.spec.params.validate()?;
    let grid = ctx.spec.grid()?;
    let base = base_run_config(&ctx.spec, grid);

    let jobs: Vec<(u64, MeanSpectrumSink)> = (0..ctx.spec.run.trajectories)
        .map(|id| (id, MeanSpectrumSink::new(grid, id == 0, 10)))
        .collect();
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

    let n = grid.n();
    let mut sum1 = vec![0.0; n];
    let mut sum2 = vec![0.0; n];
    let mut count = 0;
    let mut rows = Vec::new();
    let mut max_sh = 0.0_f64;
    for (summary, sink) in results {
        max_sh = max_sh.max(summary.max_sh_modulus);
        for (a, b) in sum1.iter_mut().zip(&sink.sum1) {
            *a += b;
        }
        for (a, b) in sum2.iter_mut().zip(&sink.sum2) {
            *a += b;
        }
        count += sink.count;
        if let Some(r) = sink.rows {
            rows = r;
        }
    }
    if count == 0 {
        return Err(CliError::Run("no samples were recorded".into()));
    }

    let path = ctx.path("far_field_mean.csv");
    write_csv(
        &path,
        &["k", "mean_intensity1", "mean_intensity2"],
        signed_order(n).map(|m| {
            vec![
                fmt(grid.wavenumber(m)),
                fmt(sum1[m] / count as f64),
                fmt(sum2[m] / count as f64),
            ]
        }),
    )?;

    let path = ctx.path("spacetime_re_a1.csv");
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..n).map(|m| fmt(grid.position(m))));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    write_csv(
        &path,
        &header_refs,
        rows.iter().map(|(t, re)| {
            let mut row = Vec::with_capacity(n + 1);
            row.push(fmt(*t));
            row.extend(re.iter().map(|v| fmt(*v)));
            row
        }),
    )?;

    let mc = grid.mode_nearest(threshold.k_c);
    let sym = |m: usize| sum1[m] + sum1[grid.opposite_mode(m)];
    let argmax = (1..n / 2)
        .max_by(|&a, &b| sym(a).total_cmp(&sym(b)))
        .unwrap();
    checks.record(
        argmax.abs_diff(mc) <= 3,
        "time-averaged far field peaks at the critical wavenumber",
        format!(
            "strongest mode pair {argmax} (k = {:.4}), critical mode {mc} ± 3",
            grid.wavenumber(argmax)
        ),
    );
    checks.record(
        max_sh < 2.0,
        "Q-representation validity along the run",
        format!("max |A2| = {max_sh:.4} < 2"),
    );
    checks.note(format!(
        "{} trajectories, {} samples, pump/threshold = {:.6}",
        ctx.spec.run.trajectories,
        count,
        ctx.spec.params.pump / threshold.e_t
    ));
    Ok(())
}

/// Below-threshold operating state shared by the analytic figure paths.
fn bright_state(ctx: &Ctx, threshold: &ThresholdResult) -> CliResult<SteadyState> {
    if ctx.spec.params.pump >= threshold.e_t {
        return Err(CliError::Run(format!(
            "this figure needs a below-threshold pump: E = {} >= E_t = {}",
            ctx.spec.params.pump, threshold.e_t
        )));
    }
    Ok(steady_states(&ctx.spec.params)?[0])
}

fn emit_spectrum_csv(
    ctx: &mut Ctx,
    name: &str,
    rows: &[CorrelationPrediction],
) -> CliResult<()> {
    let path = ctx.path(name);
    write_csv(
        &path,
        &linear_corr::SPECTRUM_HEADER,
        rows.iter().map(linear_corr::spectrum_row),
    )
}

fn fig_number_correlations(ctx: &mut Ctx, checks: &mut Checks) -> CliResult<()> {
    let threshold = ctx.threshold()?;
    ctx.spec.resolve_pump(threshold.e_t);
    ctx.spec.params.validate()?;
    let state = bright_state(ctx, &threshold)?;
    let grid = ctx.spec.grid()?;

    let ks = shg_core::default_spectrum_ks(threshold.k_c);
    let spectrum = correlation_spectrum(&ctx.spec.params, &state, &ks)?;
    emit_spectrum_csv(ctx, "analytic.csv", &spectrum.rows)?;

    let grid_ks: Vec<f64> = (0..grid.n() / 2).map(|m| grid.wavenumber(m)).collect();
    let grid_spectrum = correlation_spectrum(&ctx.spec.params, &state, &grid_ks)?;
    emit_spectrum_csv(ctx, "analytic_grid.csv", &grid_spectrum.rows)?;

    if !ctx.spec.figure_monte_carlo {
        checks.note("stochastic section skipped (figure.monte_carlo = false)".into());
        return Ok(());
    }

    let (acc, stats, _) = run_ensemble_accumulated(&ctx.spec, &threshold, None)?;
    let view = acc.jackknife()?;
    write_estimates(ctx, &view, &grid, stats.n_effective)?;
    coverage_checks(checks, &view, &grid_spectrum.rows, &grid, &stats);
    checks.record(
        stats.max_sh_modulus < 2.0,
        "Q-representation validity along the runs",
        format!("max |A2| = {:.4} < 2", stats.max_sh_modulus),
    );
    Ok(())
}

/// Three-sigma agreement between estimated and predicted photon-number
/// correlations across all resolvable grid modes.
fn coverage_checks(
    checks: &mut Checks,
    view: &JackknifeView,
    predictions: &[CorrelationPrediction],
    grid: &Grid1D,
    stats: &EnsembleStats,
) {
    let families: [(&str, Statistic, fn(&CorrelationPrediction) -> f64); 4] = [
        ("cn11", Statistic::NumberCorrelation(Field::Fundamental), |p| p.cn11),
        ("cn22", Statistic::NumberCorrelation(Field::SecondHarmonic), |p| {
            p.cn22
        }),
        ("cn12_opp", Statistic::CrossNumberOpposite, |p| p.cn12_opp),
        ("cn12_same", Statistic::CrossNumberSame, |p| p.cn12_same),
    ];
    let mc = stats.critical_mode;
    for (name, stat, predicted) in families {
        // Deep shot-noise tails are not statistically resolvable at any
        // reasonable sample volume (the photon-number variance there is a
        // ~1e-6 correction to the sampling noise floor), and the estimator
        // refuses them; agreement is scored over the resolvable modes.
        let mut covered = 0_usize;
        let mut resolvable = 0_usize;
        for m in 1..grid.n() / 2 {
            let Ok(est) = view.estimate(stat, m) else {
                continue;
            };
            resolvable += 1;
            if (est.value - predicted(&predictions[m])).abs() <= 3.0 * est.se {
                covered += 1;
            }
        }
        let frac = covered as f64 / resolvable.max(1) as f64;
        checks.record(
            frac >= 0.95 && resolvable >= 30,
            &format!("{name}: three-sigma agreement with the linearized theory"),
            format!(
                "{covered}/{resolvable} resolvable grid modes within 3 SE ({:.1}% >= 95%, >= 30 modes)",
                100.0 * frac
            ),
        );
        if let Ok(est) = view.estimate(stat, mc) {
            checks.note(format!(
                "{name} at k_c: measured {:.6} ± {:.6}, predicted {:.6}",
                est.value,
                est.se,
                predicted(&predictions[mc])
            ));
        }
    }
}

fn fig_peaks_vs_pump(ctx: &mut Ctx, checks: &mut Checks) -> CliResult<()> {
    let threshold = ctx.threshold()?;
    let fractions = ctx.spec.figure_fractions.clone();
    if fractions.is_empty() {
        return Err(CliError::Config(
            "figure 7 needs at least one pump fraction in [figure] fractions".into(),
        ));
    }
    if fractions.iter().any(|&f| f >= 1.0) {
        return Err(CliError::Config(
            "figure 7 pump fractions must lie below 1 (below threshold)".into(),
        ));
    }
    let k_c = threshold.k_c;
    let ks: Vec<f64> = (0..=2000)
        .map(|i| k_c * (0.5 + i as f64 / 2000.0))
        .collect();

    struct Row {
        fraction: f64,
        pump: f64,
        at_kc: [f64; 4],
        peak: [(f64, f64); 4], // (value, k)
    }
    let params = ctx.spec.params;
    let eval = move |fraction: f64| -> CliResult<Row> {
        let p = params.with_pump(fraction * threshold.e_t);
        let s = steady_states(&p)?[0];
        let at = predict(&p, &s, k_c)?;
        let at_kc = [at.cn11, at.cn12_opp, at.cn22, at.cn12_same];
        let mut peak = [(f64::MIN, 0.0); 4];
        for &k in &ks {
            let r = predict(&p, &s, k)?;
            for (slot, v) in peak
                .iter_mut()
                .zip([r.cn11, r.cn12_opp, r.cn22, r.cn12_same])
            {
                if v > slot.0 {
                    *slot = (v, k);
                }
            }
        }
        Ok(Row {
            fraction,
            pump: p.pump,
            at_kc,
            peak,
        })
    };

    let mut sorted = fractions.clone();
    sorted.sort_by(f64::total_cmp);
    let rows: CliResult<Vec<Row>> = sorted.iter().map(|&f| eval(f)).collect();
    let rows = rows?;

    let path = ctx.path("peaks.csv");
    write_csv(
        &path,
        &[
            "fraction",
            "pump",
            "cn11_at_kc",
            "cn12_opp_at_kc",
            "cn22_at_kc",
            "cn12_same_at_kc",
            "cn11_peak",
            "cn11_peak_k",
            "cn12_opp_peak",
            "cn12_opp_peak_k",
            "cn22_peak",
            "cn22_peak_k",
            "cn12_same_peak",
            "cn12_same_peak_k",
        ],
        rows.iter().map(|r| {
            let mut row = vec![fmt(r.fraction), fmt(r.pump)];
            row.extend(r.at_kc.iter().map(|v| fmt(*v)));
            for (v, k) in r.peak {
                row.push(fmt(v));
                row.push(fmt(k));
            }
            row
        }),
    )?;

    let anchor = eval(0.9)?;
    checks.record(
        close(anchor.at_kc[0], REF_CN11_09, 1e-3),
        "cn11 at k_c, E = 0.9 E_t",
        vs(anchor.at_kc[0], REF_CN11_09, "tol 1e-3"),
    );
    checks.record(
        close(anchor.at_kc[1], REF_CN12_OPP_09, 1e-3),
        "cn12 (opposite) at k_c, E = 0.9 E_t",
        vs(anchor.at_kc[1], REF_CN12_OPP_09, "tol 1e-3"),
    );
    checks.record(
        close(anchor.at_kc[2], REF_CN22_09, 1e-3),
        "cn22 at k_c, E = 0.9 E_t",
        vs(anchor.at_kc[2], REF_CN22_09, "tol 1e-3"),
    );
    checks.record(
        anchor.at_kc[0] >= anchor.at_kc[1] && anchor.at_kc[1] >= anchor.at_kc[2],
        "ordering of the correlation strengths",
        format!(
            "cn11 {:.4} >= cn12_opp {:.4} >= cn22 {:.4}",
            anchor.at_kc[0], anchor.at_kc[1], anchor.at_kc[2]
        ),
    );
    let monotone = rows.windows(2).all(|w| w[1].at_kc[0] >= w[0].at_kc[0]);
    checks.record(
        monotone,
        "cn11 at k_c grows toward threshold",
        format!(
            "non-decreasing over fractions {:.3} .. {:.3}",
            rows.first().map(|r| r.fraction).unwrap_or(f64::NAN),
            rows.last().map(|r| r.fraction).unwrap_or(f64::NAN)
        ),
    );
    Ok(())
}

fn fig_k0_vs_pump(ctx: &mut Ctx, checks: &mut Checks) -> CliResult<()> {
    let threshold = ctx.threshold()?;
    let fractions = ctx.spec.figure_fractions.clone();
    if fractions.is_empty() {
        return Err(CliError::Config(
            "figure 8 needs at least one pump fraction in [figure] fractions".into(),
        ));
    }
    if fractions.iter().any(|&f| f >= 1.0) {
        return Err(CliError::Config(
            "figure 8 pump fractions must lie below 1 (below threshold)".into(),
        ));
    }
    let params = ctx.spec.params;
    let e_t = threshold.e_t;
    let eval = move |fraction: f64| -> CliResult<shg_core::K0Prediction> {
        let p = params.with_pump(fraction * e_t);
        let s = steady_states(&p)?[0];
        Ok(predict_k0(&p, &s)?)
    };

    let mut sorted = fractions.clone();
    sorted.sort_by(f64::total_cmp);
    let rows: CliResult<Vec<(f64, shg_core::K0Prediction)>> = sorted
        .iter()
        .map(|&f| Ok((f, eval(f)?)))
        .collect();
    let rows = rows?;

    let path = ctx.path("k0.csv");
    write_csv(
        &path,
        &[
            "fraction",
            "pump",
            "cn12",
            "c11_plus",
            "c22_plus",
            "c12_minus",
            "c12_plus",
        ],
        rows.iter().map(|(f, r)| {
            vec![
                fmt(*f),
                fmt(f * threshold.e_t),
                fmt(r.cn12),
                fmt(r.c11_plus),
                fmt(r.c22_plus),
                fmt(r.c12_minus),
                fmt(r.c12_plus),
            ]
        }),
    )?;

    let anchor = eval(0.99)?;
    checks.record(
        close(anchor.cn12, REF_CN12_K0_099, 1e-3),
        "homogeneous-mode cross correlation at E = 0.99 E_t",
        vs(anchor.cn12, REF_CN12_K0_099, "tol 1e-3"),
    );
    checks.record(
        rows.iter().all(|(_, r)| r.cn12 < 0.0),
        "anticorrelation of the two homogeneous modes",
        "cn12(k = 0) < 0 at every emitted pump".into(),
    );
    let monotone = rows.windows(2).all(|w| w[1].1.cn12 <= w[0].1.cn12);
    checks.record(
        monotone,
        "anticorrelation deepens toward threshold",
        format!(
            "cn12(k = 0) non-increasing over fractions {:.3} .. {:.3}",
            rows.first().map(|r| r.0).unwrap_or(f64::NAN),
            rows.last().map(|r| r.0).unwrap_or(f64::NAN)
        ),
    );
    Ok(())
}

fn fig_spectra(ctx: &mut Ctx, checks: &mut Checks, figure: u32) -> CliResult<()> {
    let threshold = ctx.threshold()?;
    ctx.spec.resolve_pump(threshold.e_t);
    ctx.spec.params.validate()?;
    let state = bright_state(ctx, &threshold)?;

    let ks = shg_core::default_spectrum_ks(threshold.k_c);
    let spectrum = correlation_spectrum(&ctx.spec.params, &state, &ks)?;
    emit_spectrum_csv(ctx, "spectra.csv", &spectrum.rows)?;

    let at_kc = predict(&ctx.spec.params, &state, threshold.k_c)?;
    match figure {
        9 => {
            checks.record(
                close(at_kc.c11_minus, REF_C11_MINUS_099, 1e-3),
                "fundamental difference squeezing at k_c",
                vs(at_kc.c11_minus, REF_C11_MINUS_099, "tol 1e-3"),
            );
            let (peak_k, peak) = spectrum
                .rows
                .iter()
                .map(|r| (r.k, r.c11_plus))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            checks.record(
                (25.0..=45.0).contains(&peak),
                "peak of the fundamental sum variance",
                format!("max c11_plus = {peak:.4} at k = {peak_k:.4} (expected in [25, 45])"),
            );
            checks.record(
                spectrum
                    .rows
                    .iter()
                    .filter(|r| r.k > 0.0)
                    .all(|r| r.c11_minus < 1.0),
                "difference squeezing across the whole band",
                "c11_minus < 1 at every k > 0".into(),
            );
        }
        10 => {
            checks.record(
                close(at_kc.c22_minus, REF_C22_MINUS_099, 1e-3),
                "second-harmonic difference squeezing at k_c",
                vs(at_kc.c22_minus, REF_C22_MINUS_099, "tol 1e-3"),
            );
            checks.record(
                rel_close(at_kc.c22_plus, REF_C22_PLUS_099, 1e-3),
                "second-harmonic sum variance at k_c",
                vs(at_kc.c22_plus, REF_C22_PLUS_099, "rel tol 1e-3"),
            );
            // The difference variance is squeezed through the amplification
            // band and relaxes to shot noise from slightly above beyond it.
            checks.record(
                spectrum
                    .rows
                    .iter()
                    .filter(|r| r.k > 0.0 && r.k <= 1.5 * threshold.k_c)
                    .all(|r| r.c22_minus < 1.0),
                "difference squeezing through the amplification band",
                "c22_minus < 1 for 0 < k <= 1.5 k_c".into(),
            );
            let edge = spectrum.rows.last().map(|r| r.c22_minus).unwrap_or(f64::NAN);
            checks.record(
                close(edge, 1.0, 5e-3),
                "shot-noise asymptote of the difference variance",
                format!("c22_minus = {edge:.5} at the spectrum edge (tol 5e-3 around 1)"),
            );
        }
        11 => {
            checks.record(
                rel_close(at_kc.c12_minus_opp, REF_C12_MINUS_OPP_099, 1e-3),
                "cross difference (opposite modes) at k_c",
                vs(at_kc.c12_minus_opp, REF_C12_MINUS_OPP_099, "rel tol 1e-3"),
            );
            checks.record(
                rel_close(at_kc.c12_plus_opp, REF_C12_PLUS_OPP_099, 1e-3),
                "cross sum (opposite modes) at k_c",
                vs(at_kc.c12_plus_opp, REF_C12_PLUS_OPP_099, "rel tol 1e-3"),
            );
            checks.record(
                rel_close(at_kc.c12_minus_same, REF_C12_MINUS_SAME_099, 1e-3),
                "cross difference (same mode) at k_c",
                vs(at_kc.c12_minus_same, REF_C12_MINUS_SAME_099, "rel tol 1e-3"),
            );
            checks.record(
                rel_close(at_kc.c12_plus_same, REF_C12_PLUS_SAME_099, 1e-3),
                "cross sum (same mode) at k_c",
                vs(at_kc.c12_plus_same, REF_C12_PLUS_SAME_099, "rel tol 1e-3"),
            );
            let mid_band = [1.0, 1.4]
                .iter()
                .map(|&k| predict(&ctx.spec.params, &state, k).map(|r| r.c12_minus_opp))
                .collect::<Result<Vec<f64>, _>>()?;
            checks.record(
                mid_band.iter().all(|&v| v < 1.0),
                "cross-field squeezing in the mid band",
                format!(
                    "c12_minus_opp = {:.4} (k = 1.0), {:.4} (k = 1.4), both < 1",
                    mid_band[0], mid_band[1]
                ),
            );
        }
        _ => unreachable!(),
    }
    // c11_plus(k_c) serves as an overall normalization cross-check on all
    // three spectra figures.
    checks.record(
        rel_close(at_kc.c11_plus, REF_C11_PLUS_099, 1e-3),
        "fundamental sum variance at k_c",
        vs(at_kc.c11_plus, REF_C11_PLUS_099, "rel tol 1e-3"),
    );
    Ok(())
}

fn fig_nonlinear_near_threshold(ctx: &mut Ctx, checks: &mut Checks) -> CliResult<()> {
    let threshold = ctx.threshold()?;
    ctx.spec.resolve_pump(threshold.e_t);
    ctx.spec.params.validate()?;
    let grid = ctx.spec.grid()?;
    if !ctx.spec.figure_monte_carlo {
        checks.note("stochastic section skipped (figure.monte_carlo = false)".into());
        return Ok(());
    }
    let (acc, stats, _) = run_ensemble_accumulated(&ctx.spec, &threshold, None)?;
    let view = acc.jackknife()?;
    write_estimates(ctx, &view, &grid, stats.n_effective)?;

    let mc = stats.critical_mode;
    let zero_family: [(&str, Statistic); 4] = [
        (
            "cn11(0, k_c)",
            Statistic::NumberCorrelationFromZero(Field::Fundamental),
        ),
        (
            "cn22(0, k_c)",
            Statistic::NumberCorrelationFromZero(Field::SecondHarmonic),
        ),
        ("cn12(0 -> k_c)", Statistic::CrossNumberZeroTo),
        ("cn12(k_c -> 0)", Statistic::CrossNumberToZero),
    ];
    for (label, stat) in zero_family {
        match view.estimate(stat, mc) {
            Ok(est) => checks.record(
                est.value + 3.0 * est.se < 0.0,
                &format!("{label} is negative"),
                format!("{:.6} ± {:.6} (must stay below 0 at 3 SE)", est.value, est.se),
            ),
            Err(e) => checks.record(false, label, format!("estimate failed: {e}")),
        }
    }
    checks.record(
        stats.max_sh_modulus < 2.0,
        "Q-representation validity along the runs",
        format!("max |A2| = {:.4} < 2", stats.max_sh_modulus),
    );
    checks.note(format!(
        "pump/threshold = {:.8}, n_th = {:.1e}, {} samples",
        ctx.spec.params.pump / threshold.e_t,
        ctx.spec.params.n_th,
        stats.samples
    ));
    Ok(())
}

fn fig_above_threshold(ctx: &mut Ctx, checks: &mut Checks) -> CliResult<()> {
    let threshold = ctx.threshold()?;
    ctx.spec.resolve_pump(threshold.e_t);
    ctx.spec.params.validate()?;
    let grid = ctx.spec.grid()?;
    if !ctx.spec.figure_monte_carlo {
        checks.note("stochastic section skipped (figure.monte_carlo = false)".into());
        return Ok(());
    }
    let (acc, stats, _) = run_ensemble_accumulated(&ctx.spec, &threshold, None)?;
    let view = acc.jackknife()?;
    write_estimates(ctx, &view, &grid, stats.n_effective)?;

    let mc = stats.critical_mode;
    let n1 = |m: usize| {
        view.estimate(Statistic::MeanPhoton(Field::Fundamental), m)
            .map(|e| e.value)
            .unwrap_or(f64::NAN)
    };
    let probe = grid.n() / 4; // far from the roll's harmonic comb
    let occupation = n1(mc);
    let off = n1(probe);
    checks.record(
        occupation > 100.0 * off.abs().max(f64::MIN_POSITIVE),
        "macroscopic occupation of the critical mode",
        format!(
            "mean photon number {occupation:.3e} at k_c vs {off:.3e} off-pattern (mode {probe})"
        ),
    );
    match view.estimate(Statistic::NumberCorrelation(Field::Fundamental), mc) {
        Ok(est) => checks.record(
            est.value + 3.0 * est.se < REF_CN11_0999,
            "opposite-mode correlation in the patterned state",
            format!(
                "cn11(k_c, -k_c) = {:.6} ± {:.6}, below the near-threshold bound {REF_CN11_0999}",
                est.value, est.se
            ),
        ),
        Err(e) => checks.record(
            false,
            "opposite-mode correlation in the patterned state",
            format!("estimate failed: {e}"),
        ),
    }
    checks.record(
        stats.max_sh_modulus < 2.0,
        "Q-representation validity along the runs",
        format!("max |A2| = {:.4} < 2", stats.max_sh_modulus),
    );
    checks.note(format!(
        "pump/threshold = {:.4}, {} samples, inefficiency {:.1}",
        ctx.spec.params.pump / threshold.e_t,
        stats.samples,
        stats.inefficiency
    ));
    Ok(())
}
