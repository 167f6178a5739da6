//! Stationary second moments of the linearized fluctuations and the
//! normalized correlation observables built from them.
//!
//! With fluctuations expanded in eigenmodes of M(k) (see [`crate::linear`]),
//! the stationary moments of the mode pair (k, −k) reduce to the 2×2 blocks
//!
//! ```text
//! G⁻_ij(k) = ⟨δβ_i(k) δβ_j*(k)⟩   (Hermitian, vacuum value δ_ij/2)
//! G⁺_ij(k) = ⟨δβ_i(k) δβ_j(−k)⟩   (symmetric, vacuum value 0)
//! ```
//!
//! in natural (noise-strength-independent) units: the physical moments carry
//! an extra factor 2/n_th per unit k-space density. Indices 1, 2 label the
//! fundamental and second-harmonic fields.
//!
//! From these follow equal-time photon-number correlations between far-field
//! modes and the variances of photon-number sums and differences, normalized
//! so that coherent light gives 1 and perfect twin beams give 0 for the
//! difference. The homogeneous mode k = 0 is its own mirror partner, so its
//! observables mix the mean field with the fluctuations and take a separate
//! path ([`predict_k0`]).

use crate::error::{Error, Result};
use crate::linear::{eigensystem, mode_matrix, EigenSystem};
use crate::params::Params;
use crate::steady::SteadyState;
use crate::C64;
use serde::{Deserialize, Serialize};

/// Margin below threshold required of the slowest eigenpair before the
/// stationary moments are considered finite.
const PAIR_SUM_FLOOR: f64 = -1e-12;

/// Diffusion matrix elements projected onto the eigenbasis.
///
/// `a[l][m]` multiplies modes whose pair decays at rate −(λ_l + λ_m*);
/// `b[l][m]` the anomalous pairs decaying at −(λ_l + λ_m). `t = V⁻¹` is the
/// dual basis of the eigendecomposition.
pub fn noise_matrices(
    p: &Params,
    s: &SteadyState,
    eig: &EigenSystem,
) -> ([[C64; 4]; 4], [[C64; 4]; 4]) {
    let t = &eig.inverse;
    let a2 = s.a2;
    let g = p.gamma;
    let mut a = [[C64::ZERO; 4]; 4];
    let mut b = [[C64::ZERO; 4]; 4];
    for l in 0..4 {
        for m in 0..4 {
            let tl = [t[(l, 0)], t[(l, 1)], t[(l, 2)], t[(l, 3)]];
            let tm = [t[(m, 0)], t[(m, 1)], t[(m, 2)], t[(m, 3)]];
            a[l][m] = tl[0] * tm[0].conj() + tl[1] * tm[1].conj()
                - 0.5 * a2 * tl[0] * tm[1].conj()
                - 0.5 * a2.conj() * tl[1] * tm[0].conj()
                + g * (tl[2] * tm[2].conj() + tl[3] * tm[3].conj());
            b[l][m] = tl[0] * tm[1] + tl[1] * tm[0]
                - 0.5 * a2 * tl[0] * tm[0]
                - 0.5 * a2.conj() * tl[1] * tm[1]
                + g * (tl[2] * tm[3] + tl[3] * tm[2]);
        }
    }
    (a, b)
}

/// The stationary moment blocks G⁻ (normal) and G⁺ (anomalous) at one k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GFunctions {
    pub minus: [[C64; 2]; 2],
    pub plus: [[C64; 2]; 2],
}

/// Stationary moments of the linearization around `s` at wavenumber `k`.
///
/// `s` may be any reference state, not only a self-consistent steady state;
/// this is used by the decoupled-parametric-oscillator checks.
pub fn g_functions(p: &Params, s: &SteadyState, k: f64) -> Result<GFunctions> {
    let m = mode_matrix(p, s, k);
    let eig = eigensystem(&m, k)?;
    let pair_sum = 2.0 * eig.values[0].re;
    if pair_sum >= PAIR_SUM_FLOOR {
        return Err(Error::AtThresholdDivergence { k, pair_sum });
    }
    let (a, b) = noise_matrices(p, s, &eig);
    let v = &eig.vectors;
    // β1 lives in row 0 of the fluctuation vector, β2 in row 2
    let rows = [0usize, 2usize];
    let mut minus = [[C64::ZERO; 2]; 2];
    let mut plus = [[C64::ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let (ri, rj) = (rows[i], rows[j]);
            let mut gm = C64::ZERO;
            let mut gp = C64::ZERO;
            for l in 0..4 {
                for mm in 0..4 {
                    let vl = v[(ri, l)];
                    gm += a[l][mm] * vl * v[(rj, mm)].conj()
                        / -(eig.values[l] + eig.values[mm].conj());
                    gp += b[l][mm] * vl * v[(rj, mm)] / -(eig.values[l] + eig.values[mm]);
                }
            }
            minus[i][j] = gm;
            plus[i][j] = gp;
        }
    }
    Ok(GFunctions { minus, plus })
}

/// Normalized correlation observables for the far-field mode pair (k, −k).
///
/// `cnXY` are photon-number correlation coefficients (range [−1, 1]);
/// `cXY_minus`/`cXY_plus` are variances of photon-number differences and
/// sums normalized to the coherent-state level (1 = shot noise, < 1 =
/// nonclassical). `_opp` pairs a mode with its mirror image −k, `_same`
/// pairs the two fields at the same k. The same-field same-mode correlation
/// coefficient is identically 1 and is not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPrediction {
    pub k: f64,
    /// corr[n₁(k), n₁(−k)]
    pub cn11: f64,
    /// corr[n₂(k), n₂(−k)]
    pub cn22: f64,
    /// corr[n₁(k), n₂(−k)]
    pub cn12_opp: f64,
    /// corr[n₁(k), n₂(k)]
    pub cn12_same: f64,
    pub c11_minus: f64,
    pub c11_plus: f64,
    pub c22_minus: f64,
    pub c22_plus: f64,
    pub c12_minus_opp: f64,
    pub c12_plus_opp: f64,
    pub c12_minus_same: f64,
    pub c12_plus_same: f64,
}

fn prediction_from_g(k: f64, g: &GFunctions) -> CorrelationPrediction {
    let gm11 = g.minus[0][0].re;
    let gm22 = g.minus[1][1].re;
    let eta1 = gm11 * (gm11 - 0.5);
    let eta2 = gm22 * (gm22 - 0.5);
    let eta12 = (eta1 * eta2).sqrt();

    let single = |gmjj: f64, gpjj_sq: f64, sign: f64| {
        (2.0 * (gmjj * gmjj + sign * gpjj_sq) - gmjj) / (gmjj - 0.5)
    };
    let cross = |g12_sq: f64, sign: f64| {
        let trace = gm11 + gm22;
        (2.0 * (gm11 * gm11 + gm22 * gm22 + sign * 2.0 * g12_sq) - trace) / (trace - 1.0)
    };

    let gp11_sq = g.plus[0][0].norm_sqr();
    let gp22_sq = g.plus[1][1].norm_sqr();
    let gp12_sq = g.plus[0][1].norm_sqr();
    let gm12_sq = g.minus[0][1].norm_sqr();

    CorrelationPrediction {
        k,
        cn11: gp11_sq / eta1,
        cn22: gp22_sq / eta2,
        cn12_opp: gp12_sq / eta12,
        cn12_same: gm12_sq / eta12,
        c11_minus: single(gm11, gp11_sq, -1.0),
        c11_plus: single(gm11, gp11_sq, 1.0),
        c22_minus: single(gm22, gp22_sq, -1.0),
        c22_plus: single(gm22, gp22_sq, 1.0),
        c12_minus_opp: cross(gp12_sq, -1.0),
        c12_plus_opp: cross(gp12_sq, 1.0),
        c12_minus_same: cross(gm12_sq, -1.0),
        c12_plus_same: cross(gm12_sq, 1.0),
    }
}

/// Correlation observables of the pair (k, −k) for k ≠ 0.
pub fn predict(p: &Params, s: &SteadyState, k: f64) -> Result<CorrelationPrediction> {
    let g = g_functions(p, s, k)?;
    Ok(prediction_from_g(k, &g))
}

/// Correlation observables of the homogeneous far-field mode.
///
/// k = 0 coincides with its mirror partner, so photon-number fluctuations
/// are dominated by the beat of the mean field 𝒜_j against the fluctuation
/// quadrature aligned with it. Difference variances of a single mode with
/// itself vanish identically and are not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct K0Prediction {
    /// corr[n₁(0), n₂(0)]
    pub cn12: f64,
    pub c11_plus: f64,
    pub c22_plus: f64,
    pub c12_minus: f64,
    pub c12_plus: f64,
}

/// Correlation observables at k = 0 around a bright steady state.
pub fn predict_k0(p: &Params, s: &SteadyState) -> Result<K0Prediction> {
    let n1 = s.a1.norm_sqr();
    let n2 = s.a2.norm_sqr();
    if n1 < 1e-30 || n2 < 1e-30 {
        return Err(Error::InvalidParameter(
            "k = 0 observables require a bright steady state".into(),
        ));
    }
    let g = g_functions(p, s, 0.0)?;
    let gm11 = g.minus[0][0].re;
    let gm22 = g.minus[1][1].re;
    let (a1, a2) = (s.a1, s.a2);

    // ζ_j: photon-number variance of mode j projected on the mean field
    let zeta1 = n1 * (gm11 - 0.25) + (a1.conj() * a1.conj() * g.plus[0][0]).re;
    let zeta2 = n2 * (gm22 - 0.25) + (a2.conj() * a2.conj() * g.plus[1][1]).re;
    let cov = (a1.conj() * a2 * g.minus[0][1] + a1.conj() * a2.conj() * g.plus[0][1]).re;

    let anomalous = (a1.conj() * a1.conj() * g.plus[0][0]).re
        + (a2.conj() * a2.conj() * g.plus[1][1]).re;
    let diag = n1 * gm11 + n2 * gm22;
    let total = n1 + n2;

    Ok(K0Prediction {
        cn12: cov / (zeta1 * zeta2).sqrt(),
        c11_plus: 4.0 * zeta1 / n1,
        c22_plus: 4.0 * zeta2 / n2,
        c12_minus: 4.0 * (anomalous - 2.0 * cov + diag) / total - 1.0,
        c12_plus: 4.0 * (anomalous + 2.0 * cov + diag) / total - 1.0,
    })
}

/// A sampled spectrum of correlation observables over wavenumbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationSpectrum {
    pub rows: Vec<CorrelationPrediction>,
}

/// Default sampling of [0, 2.5·k_c] used by the spectrum reports.
pub fn default_spectrum_ks(k_c: f64) -> Vec<f64> {
    let n = 1024;
    (0..n).map(|i| 2.5 * k_c * i as f64 / (n - 1) as f64).collect()
}

/// Correlation observables over a wavenumber list.
///
/// An exact k = 0 entry is computed through [`predict_k0`] and embedded with
/// the conventions: same-mode correlation coefficients are 1, difference
/// variances of a mode with itself are 0, and the opposite/same distinction
/// collapses.
pub fn correlation_spectrum(
    p: &Params,
    s: &SteadyState,
    ks: &[f64],
) -> Result<CorrelationSpectrum> {
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        if k == 0.0 {
            let k0 = predict_k0(p, s)?;
            rows.push(CorrelationPrediction {
                k: 0.0,
                cn11: 1.0,
                cn22: 1.0,
                cn12_opp: k0.cn12,
                cn12_same: k0.cn12,
                c11_minus: 0.0,
                c11_plus: k0.c11_plus,
                c22_minus: 0.0,
                c22_plus: k0.c22_plus,
                c12_minus_opp: k0.c12_minus,
                c12_plus_opp: k0.c12_plus,
                c12_minus_same: k0.c12_minus,
                c12_plus_same: k0.c12_plus,
            });
        } else {
            rows.push(predict(p, s, k)?);
        }
    }
    Ok(CorrelationSpectrum { rows })
}
