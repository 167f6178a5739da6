//! Shared fixtures for the criterion benchmarks in `benches/`.

use shg_core::{Grid1D, Params, SteadyState};

/// Reference operating point used throughout the benchmarks: matched
/// detunings Δ1 = 0, Δ2 = -2, loss ratio γ = 1, thermal scale n_th = 1e8.
pub fn reference_params() -> Params {
    Params {
        delta1: 0.0,
        delta2: -2.0,
        gamma: 1.0,
        pump: 0.0,
        n_th: 1e8,
    }
}

/// Params pinned slightly below the pattern-formation threshold.
pub fn below_threshold_params(fraction: f64) -> Params {
    let base = reference_params();
    let threshold =
        shg_core::find_threshold(&base, &Default::default()).expect("threshold search");
    base.with_pump(fraction * threshold.e_t)
}

/// Steady state for a given operating point (unique below threshold).
pub fn steady(params: &Params) -> SteadyState {
    shg_core::steady_states(params).expect("steady state")[0]
}

/// Standard benchmark grid: `n` modes on the domain used by the
/// correlation studies (length chosen so the critical mode is resolved).
pub fn bench_grid(n: usize) -> Grid1D {
    Grid1D::new(n, 103.057).expect("grid")
}
