//! Sampling of the Q-representation noise fields.
//!
//! Per grid cell and step the fundamental noise ξ1 is a complex Gaussian
//! with ⟨ξ1 ξ1*⟩ = s² and the phase-sensitive pseudo-noise moment
//! ⟨ξ1 ξ1⟩ = −(A2/2) s², where s² = 1/(dx·dt) is the cell average of a
//! space-time delta correlation. Its quadrature covariance matrix
//!
//! ```text
//! Var(Re ξ1) = (2 − Re A2)/4 · s²
//! Var(Im ξ1) = (2 + Re A2)/4 · s²
//! Cov(Re, Im) = −Im A2/4 · s²
//! ```
//!
//! is positive definite exactly while |A2| < 2; beyond that the Q drift
//! matrix loses positivity and the sampler reports failure. The
//! second-harmonic noise ξ2 is circular with ⟨ξ2 ξ2*⟩ = s².

use crate::C64;
use rand::Rng;
use rand_distr::StandardNormal;

/// One (ξ1, ξ2) draw for a single grid cell, or `None` when |a2| ≥ 2.
///
/// `s` is the cell noise scale, s = 1/√(dx·dt). Neither draw includes the
/// 2/n_th noise strength; callers fold that into their increment.
#[inline]
pub fn sample_noise<R: Rng + ?Sized>(rng: &mut R, a2: C64, s: f64) -> Option<(C64, C64)> {
    let var_u = (2.0 - a2.re) / 4.0;
    let var_v = (2.0 + a2.re) / 4.0;
    let cov = -a2.im / 4.0;
    // 2×2 Cholesky of [[var_u, cov], [cov, var_v]]
    let l11_sq = var_u;
    if l11_sq <= 0.0 {
        return None;
    }
    let l11 = l11_sq.sqrt();
    let l21 = cov / l11;
    let l22_sq = var_v - l21 * l21;
    if l22_sq <= 0.0 {
        return None;
    }
    let l22 = l22_sq.sqrt();

    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    let xi1 = C64::new(s * l11 * z1, s * (l21 * z1 + l22 * z2));

    let z3: f64 = rng.sample(StandardNormal);
    let z4: f64 = rng.sample(StandardNormal);
    let half = s * std::f64::consts::FRAC_1_SQRT_2;
    let xi2 = C64::new(half * z3, half * z4);

    Some((xi1, xi2))
}
