//! `shg linear-corr`: analytic correlation spectra of the linearized theory.
//!
//! Emits the twelve normalized observables of the mode pair (k, −k) on a
//! uniform wavenumber grid: photon-number correlation coefficients and
//! shot-noise-normalized variances of intensity sums and differences,
//! within and across the two fields.

use super::Ctx;
use crate::output::{fmt, write_csv};
use crate::{CliError, CliResult, CommonArgs};
use serde_json::json;
use shg_core::{correlation_spectrum, steady_states, CorrelationPrediction};

pub const SPECTRUM_HEADER: [&str; 13] = [
    "k",
    "cn11",
    "cn22",
    "cn12_opp",
    "cn12_same",
    "c11_minus",
    "c11_plus",
    "c22_minus",
    "c22_plus",
    "c12_minus_opp",
    "c12_plus_opp",
    "c12_minus_same",
    "c12_plus_same",
];

pub fn spectrum_row(r: &CorrelationPrediction) -> Vec<String> {
    vec![
        fmt(r.k),
        fmt(r.cn11),
        fmt(r.cn22),
        fmt(r.cn12_opp),
        fmt(r.cn12_same),
        fmt(r.c11_minus),
        fmt(r.c11_plus),
        fmt(r.c22_minus),
        fmt(r.c22_plus),
        fmt(r.c12_minus_opp),
        fmt(r.c12_plus_opp),
        fmt(r.c12_minus_same),
        fmt(r.c12_plus_same),
    ]
}

pub fn run(common: &CommonArgs) -> CliResult<()> {
    let mut ctx = Ctx::new("linear-corr", common)?;
    let threshold = ctx.threshold()?;
    ctx.spec.resolve_pump(threshold.e_t);
    ctx.spec.params.validate()?;
    if ctx.spec.params.pump >= threshold.e_t {
        return Err(CliError::Run(format!(
            "linearized spectra require a pump below threshold: E = {} >= E_t = {}",
            ctx.spec.params.pump, threshold.e_t
        )));
    }

    let states = steady_states(&ctx.spec.params)?;
    let state = states[0];

    let k_max = if ctx.spec.linear.spectrum_k_max > 0.0 {
        ctx.spec.linear.spectrum_k_max
    } else {
        2.5 * threshold.k_c
    };
    let n = ctx.spec.linear.spectrum_points;
    let ks: Vec<f64> = (0..n)
        .map(|i| k_max * i as f64 / (n - 1) as f64)
        .collect();
    let spectrum = correlation_spectrum(&ctx.spec.params, &state, &ks)?;

    let path = ctx.path("linear_correlations.csv");
    write_csv(
        &path,
        &SPECTRUM_HEADER,
        spectrum.rows.iter().map(spectrum_row),
    )?;

    let pump = ctx.spec.params.pump;
    ctx.finish(json!({
        "threshold": threshold,
        "pump": pump,
        "pump_over_threshold": pump / threshold.e_t,
        "steady_intensity": state.intensity,
        "sh_modulus": state.sh_modulus(),
        "k_max": k_max,
    }))
}
