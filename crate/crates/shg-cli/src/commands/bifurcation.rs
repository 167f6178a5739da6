//! `shg bifurcation`: instability thresholds over the second-harmonic detuning.
//!
//! For each Δ2 in the configured range the transverse threshold (inner
//! maximization over k) and the homogeneous self-pulsing threshold (k pinned
//! to 0) are located; per-point failures become empty cells with a note.

use super::Ctx;
use crate::output::{fmt, write_csv};
use crate::{CliResult, CommonArgs};
use serde_json::json;
use shg_core::{bifurcation_scan, InstabilityKind};

pub fn kind_label(kind: InstabilityKind) -> &'static str {
    match kind {
        InstabilityKind::StationaryTransverse => "stationary-transverse",
        InstabilityKind::OscillatoryTransverse => "oscillatory-transverse",
        InstabilityKind::SelfPulsing => "self-pulsing",
    }
}

/// Run the configured Δ2 scan and write `bifurcation.csv`; shared with the
/// figure reproductions.
pub fn emit_scan(ctx: &mut Ctx) -> CliResult<Vec<shg_core::ScanPoint>> {
    let b = ctx.spec.bifurcation.clone();
    let steps = ((b.delta2_max - b.delta2_min) / b.delta2_step).round() as usize;
    let delta2: Vec<f64> = (0..=steps)
        .map(|i| b.delta2_min + b.delta2_step * i as f64)
        .collect();

    let probe = ctx.spec.params.with_pump(0.0);
    let points = bifurcation_scan(&probe, &delta2, &ctx.spec.threshold_search());

    let path = ctx.path("bifurcation.csv");
    write_csv(
        &path,
        &[
            "delta2",
            "e_t",
            "k_c",
            "lambda_imag",
            "kind",
            "sh_modulus_at_threshold",
            "e_t_self_pulsing",
            "self_pulsing_lambda_imag",
            "note",
        ],
        points.iter().map(|pt| {
            let (e_t, k_c, li, kind) = match &pt.transverse {
                Some(t) => (
                    fmt(t.e_t),
                    fmt(t.k_c),
                    fmt(t.lambda_imag),
                    kind_label(t.kind).to_string(),
                ),
                None => (String::new(), String::new(), String::new(), String::new()),
            };
            let (sp_e, sp_li) = match &pt.self_pulsing {
                Some(t) => (fmt(t.e_t), fmt(t.lambda_imag)),
                None => (String::new(), String::new()),
            };
            vec![
                fmt(pt.delta2),
                e_t,
                k_c,
                li,
                kind,
                pt.sh_modulus_at_threshold.map(fmt).unwrap_or_default(),
                sp_e,
                sp_li,
                pt.note.clone().unwrap_or_default().replace(',', ";"),
            ]
        }),
    )?;
    Ok(points)
}

pub fn run(common: &CommonArgs) -> CliResult<()> {
    let mut ctx = Ctx::new("bifurcation", common)?;
    let points = emit_scan(&mut ctx)?;
    let found = points.iter().filter(|p| p.transverse.is_some()).count();
    ctx.finish(json!({
        "points": points.len(),
        "transverse_found": found,
    }))
}
