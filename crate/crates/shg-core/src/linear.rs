//! Per-mode linearization around a homogeneous steady state, growth rates,
//! instability thresholds, and detuning scans.
//!
//! Fluctuations are organized as the 4-vector
//! `b(k) = (β1(k), β1*(−k), β2(k), β2*(−k))` with `∂t b = M(k) b + noise`,
//!
//! ```text
//!          ⎡ σ1(k)   𝒜2      𝒜1*    0     ⎤
//! M(k)  =  ⎢ 𝒜2*     σ1*(k)  0      𝒜1    ⎥      σ1(k) = −1 + i(Δ1 − k²)
//!          ⎢ −𝒜1     0       σ2(k)  0     ⎥      σ2(k) = −γ + i(Δ2 − k²/2)
//!          ⎣ 0       −𝒜1*    0      σ2*(k)⎦
//! ```
//!
//! M depends on k only through k², so every quantity here is even in k.

use crate::error::{Error, Result};
use crate::params::Params;
use crate::steady::{steady_states, SteadyState};
use crate::C64;
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, EigVals, Inverse};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Linearization matrix M(k) around steady state `s`.
pub fn mode_matrix(p: &Params, s: &SteadyState, k: f64) -> Array2<C64> {
    let s1 = C64::new(-1.0, p.delta1 - k * k);
    let s2 = C64::new(-p.gamma, p.delta2 - 0.5 * k * k);
    let z = C64::ZERO;
    let (a1, a2) = (s.a1, s.a2);
    Array2::from_shape_vec(
        (4, 4),
        vec![
            s1,
            a2,
            a1.conj(),
            z,
            a2.conj(),
            s1.conj(),
            z,
            a1,
            -a1,
            z,
            s2,
            z,
            z,
            -a1.conj(),
            z,
            s2.conj(),
        ],
    )
    .expect("4x4 shape")
}

/// Eigen-decomposition of a mode matrix, sorted by descending real part
/// (ties by descending imaginary part). `vectors` holds right eigenvectors
/// as columns; `inverse` is the matrix of dual rows T = V⁻¹.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<C64>,
    pub vectors: Array2<C64>,
    pub inverse: Array2<C64>,
    /// ‖V‖_F · ‖V⁻¹‖_F, a cheap conditioning estimate of the basis.
    pub condition: f64,
}

fn frob(m: &Array2<C64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Condition-estimate ceiling beyond which the eigenbasis is treated as
/// numerically defective (exceptional-point vicinity).
pub const CONDITION_LIMIT: f64 = 1e12;

/// Full eigensystem of `m`, used by the correlation formulas.
pub fn eigensystem(m: &Array2<C64>, k: f64) -> Result<EigenSystem> {
    let (vals, vecs) = m
        .eig()
        .map_err(|e| Error::EigenFailure(format!("eig at k={k}: {e}")))?;

    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| {
        (vals[b].re, vals[b].im)
            .partial_cmp(&(vals[a].re, vals[a].im))
            .unwrap()
    });
    let values: Vec<C64> = order.iter().map(|&i| vals[i]).collect();
    let mut vectors = Array2::<C64>::zeros((4, 4));
    for (col, &i) in order.iter().enumerate() {
        for row in 0..4 {
            vectors[(row, col)] = vecs[(row, i)];
        }
    }

    let inverse = vectors
        .inv()
        .map_err(|e| Error::EigenFailure(format!("eigenbasis inversion at k={k}: {e}")))?;
    let condition = frob(&vectors) * frob(&inverse);
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(Error::NearDegeneracy { k, condition });
    }

    // Residual guard: ‖Mv − λv‖ ≤ 1e-8·‖M‖ per eigenpair.
    let scale = frob(m).max(1.0);
    for (j, &lam) in values.iter().enumerate() {
        let v = vectors.column(j);
        let mv = m.dot(&v);
        let mut res = 0.0_f64;
        for r in 0..4 {
            res += (mv[r] - lam * v[r]).norm_sqr();
        }
        if res.sqrt() > 1e-8 * scale {
            return Err(Error::EigenFailure(format!(
                "eigenpair residual {:.3e} at k={k}",
                res.sqrt()
            )));
        }
    }

    Ok(EigenSystem {
        values,
        vectors,
        inverse,
        condition,
    })
}

/// Largest real part over the four eigenvalues of M(k).
pub fn growth_rate(p: &Params, s: &SteadyState, k: f64) -> Result<f64> {
    let m = mode_matrix(p, s, k);
    let vals: Array1<C64> = m
        .eigvals()
        .map_err(|e| Error::EigenFailure(format!("eigvals at k={k}: {e}")))?;
    Ok(vals.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Classification of the first instability met when raising the pump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstabilityKind {
    /// Finite k_c, real critical eigenvalue: static stripe pattern.
    StationaryTransverse,
    /// Finite k_c, complex critical eigenvalue: drifting/oscillating pattern.
    OscillatoryTransverse,
    /// k_c ≈ 0, complex critical eigenvalue: homogeneous self-pulsing.
    SelfPulsing,
}

/// Result of a threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    /// Critical pump E_t.
    pub e_t: f64,
    /// Critical transverse wavenumber (argmax of the growth rate at E_t).
    pub k_c: f64,
    /// Imaginary part of the critical eigenvalue.
    pub lambda_imag: f64,
    pub kind: InstabilityKind,
}

/// Search windows and tolerances for [`find_threshold`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    /// Pump window bracketing the threshold.
    pub e_window: (f64, f64),
    /// Wavenumber window for the inner maximization. A degenerate window
    /// (lo == hi) pins k, e.g. (0, 0) for the self-pulsing threshold.
    pub k_window: (f64, f64),
    /// Coarse scan points over the k window before local refinement.
    pub coarse_k_points: usize,
    /// Coarse scan points over the pump window for bracket detection.
    pub coarse_e_points: usize,
    /// Absolute bisection tolerance on E_t.
    pub e_tol: f64,
    /// Absolute refinement tolerance on k_c.
    pub k_tol: f64,
}

impl Default for ThresholdSearch {
    fn default() -> Self {
        ThresholdSearch {
            e_window: (0.5, 30.0),
            k_window: (0.0, 4.0),
            coarse_k_points: 512,
            coarse_e_points: 48,
            e_tol: 1e-7,
            k_tol: 1e-6,
        }
    }
}

impl ThresholdSearch {
    /// Same search restricted to the homogeneous mode k = 0.
    pub fn pinned_k0(&self) -> ThresholdSearch {
        ThresholdSearch {
            k_window: (0.0, 0.0),
            ..*self
        }
    }

    fn coarse_k_spacing(&self) -> f64 {
        let (lo, hi) = self.k_window;
        if hi > lo {
            (hi - lo) / (self.coarse_k_points.max(2) - 1) as f64
        } else {
            0.0
        }
    }
}

/// Lowest-intensity steady branch at pump `e`.
fn base_state(p: &Params, e: f64) -> Result<SteadyState> {
    let states = steady_states(&p.with_pump(e))?;
    Ok(states[0])
}

/// max over the k window of the growth rate, with golden-section refinement.
/// Returns (growth, argmax k).
fn max_growth_over_k(p: &Params, e: f64, search: &ThresholdSearch) -> Result<(f64, f64)> {
    let s = base_state(p, e)?;
    let pe = p.with_pump(e);
    let (lo, hi) = search.k_window;
    if hi <= lo {
        return Ok((growth_rate(&pe, &s, lo)?, lo));
    }

    let n = search.coarse_k_points.max(8);
    let step = (hi - lo) / (n - 1) as f64;
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 0..n {
        let k = lo + step * i as f64;
        let g = growth_rate(&pe, &s, k)?;
        if g > best.0 {
            best = (g, k);
        }
    }

    // golden-section around the coarse best
    let mut a = (best.1 - step).max(lo);
    let mut b = (best.1 + step).min(hi);
    let gr = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let mut gc = growth_rate(&pe, &s, c)?;
    let mut gd = growth_rate(&pe, &s, d)?;
    while b - a > search.k_tol {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - gr * (b - a);
            gc = growth_rate(&pe, &s, c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + gr * (b - a);
            gd = growth_rate(&pe, &s, d)?;
        }
    }
    let k_best = 0.5 * (a + b);
    Ok((growth_rate(&pe, &s, k_best)?, k_best))
}

/// Locate the pump threshold where max_k Re λ crosses zero.
///
/// The coarse pump scan must bracket exactly one sign change; zero brackets
/// or more than one are reported as errors rather than resolved silently.
pub fn find_threshold(p: &Params, search: &ThresholdSearch) -> Result<ThresholdResult> {
    p.validate()?;
    let (e_lo, e_hi) = search.e_window;
    if !(e_hi > e_lo) || e_lo < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "pump window must satisfy 0 <= lo < hi, got ({e_lo}, {e_hi})"
        )));
    }

    // coarse bracket detection
    let n = search.coarse_e_points.max(4);
    let de = (e_hi - e_lo) / (n - 1) as f64;
    let mut brackets: Vec<(f64, f64)> = Vec::new();
    let mut prev = max_growth_over_k(p, e_lo, search)?.0;
    for i in 1..n {
        let e = e_lo + de * i as f64;
        let g = max_growth_over_k(p, e, search)?.0;
        if prev <= 0.0 && g > 0.0 {
            brackets.push((e - de, e));
        }
        prev = g;
    }
    match brackets.len() {
        0 => {
            return Err(Error::NoThresholdBracket {
                lo: e_lo,
                hi: e_hi,
            })
        }
        1 => {}
        _ => {
            return Err(Error::AmbiguousThreshold {
                first: brackets[0],
                second: brackets[1],
            })
        }
    }

    let (mut lo, mut hi) = brackets[0];
    while hi - lo > search.e_tol {
        let mid = 0.5 * (lo + hi);
        if max_growth_over_k(p, mid, search)?.0 > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let e_t = 0.5 * (lo + hi);
    let (_, k_c) = max_growth_over_k(p, e_t, search)?;

    // critical eigenvalue at (E_t, k_c)
    let s = base_state(p, e_t)?;
    let m = mode_matrix(&p.with_pump(e_t), &s, k_c);
    let vals = m
        .eigvals()
        .map_err(|e| Error::EigenFailure(format!("eigvals at threshold: {e}")))?;
    let crit = vals
        .iter()
        .cloned()
        .max_by(|a, b| a.re.partial_cmp(&b.re).unwrap())
        .unwrap();

    let kind = if k_c <= search.coarse_k_spacing() {
        InstabilityKind::SelfPulsing
    } else if crit.im.abs() < 1e-6 {
        InstabilityKind::StationaryTransverse
    } else {
        InstabilityKind::OscillatoryTransverse
    };

    Ok(ThresholdResult {
        e_t,
        k_c,
        lambda_imag: crit.im,
        kind,
    })
}

/// One row of a detuning scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanPoint {
    pub delta2: f64,
    /// Primary transverse instability (inner maximization over k > 0 window).
    pub transverse: Option<ThresholdResult>,
    /// Homogeneous self-pulsing threshold (k pinned to 0).
    pub self_pulsing: Option<ThresholdResult>,
    /// |A2| of the steady state at the transverse threshold.
    pub sh_modulus_at_threshold: Option<f64>,
    /// Failure reason when a column is missing.
    pub note: Option<String>,
}

/// Scan Δ2 at fixed Δ1, γ; per-point failures become gaps, not aborts.
pub fn bifurcation_scan(
    p0: &Params,
    delta2_values: &[f64],
    search: &ThresholdSearch,
) -> Vec<ScanPoint> {
    delta2_values
        .par_iter()
        .map(|&d2| {
            let p = Params {
                delta2: d2,
                ..*p0
            };
            let transverse = find_threshold(&p, search);
            let self_pulsing = find_threshold(&p, &search.pinned_k0());
            let sh_modulus_at_threshold = transverse.as_ref().ok().and_then(|t| {
                base_state(&p, t.e_t)
                    .ok()
                    .map(|s| s.sh_modulus())
            });
            let note = match (&transverse, &self_pulsing) {
                (Err(a), Err(b)) => Some(format!("transverse: {a}; self-pulsing: {b}")),
                (Err(a), _) => Some(format!("transverse: {a}")),
                (_, Err(b)) => Some(format!("self-pulsing: {b}")),
                _ => None,
            };
            ScanPoint {
                delta2: d2,
                transverse: transverse.ok(),
                self_pulsing: self_pulsing.ok(),
                sh_modulus_at_threshold,
                note,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn paper_point(pump: f64) -> Params {
        Params {
            delta1: 2.0,
            delta2: -2.0,
            gamma: 0.5,
            pump,
            n_th: 1e8,
        }
    }

    #[test]
    fn matrix_is_even_in_k() {
        let p = paper_point(6.0);
        let s = steady_states(&p).unwrap()[0];
        let m_plus = mode_matrix(&p, &s, 1.3);
        let m_minus = mode_matrix(&p, &s, -1.3);
        assert_eq!(m_plus, m_minus);
    }

    #[test]
    fn eigensystem_reconstructs_matrix() {
        let p = paper_point(7.0);
        let s = steady_states(&p).unwrap()[0];
        let m = mode_matrix(&p, &s, 1.7);
        let e = eigensystem(&m, 1.7).unwrap();
        // V diag(λ) V⁻¹ = M
        let mut lam = Array2::<C64>::zeros((4, 4));
        for i in 0..4 {
            lam[(i, i)] = e.values[i];
        }
        let rec = e.vectors.dot(&lam).dot(&e.inverse);
        for (a, b) in rec.iter().zip(m.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
        // sorted by descending real part
        assert!(e.values.windows(2).all(|w| w[0].re >= w[1].re - 1e-14));
    }

    #[test]
    fn empty_cavity_growth_is_negative() {
        let p = paper_point(0.0);
        let s = SteadyState::vacuum();
        // decoupled: Re λ = −1 (FH) and −γ (SH) at every k
        for &k in &[0.0, 1.0, 3.0] {
            let g = growth_rate(&p, &s, k).unwrap();
            assert_relative_eq!(g, -0.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn threshold_at_reference_point() {
        let p = paper_point(0.0);
        let t = find_threshold(&p, &ThresholdSearch::default()).unwrap();
        assert_relative_eq!(t.e_t, 7.481_757_1, max_relative = 2e-7);
        assert_relative_eq!(t.k_c, 1.829_074, max_relative = 1e-5);
        assert_eq!(t.kind, InstabilityKind::StationaryTransverse);
        assert!(t.lambda_imag.abs() < 1e-6);

        // the spec of the result: growth at (E_t, k_c) vanishes
        let s = steady_states(&p.with_pump(t.e_t)).unwrap()[0];
        let g = growth_rate(&p.with_pump(t.e_t), &s, t.k_c).unwrap();
        assert!(g.abs() < 1e-7);
    }

    #[test]
    fn no_bracket_is_reported() {
        let p = paper_point(0.0);
        let search = ThresholdSearch {
            e_window: (0.5, 3.0),
            ..Default::default()
        };
        match find_threshold(&p, &search) {
            Err(Error::NoThresholdBracket { .. }) => {}
            other => panic!("expected NoThresholdBracket, got {other:?}"),
        }
    }

    #[test]
    fn positive_sh_detuning_gives_oscillatory_instability() {
        let p = Params {
            delta2: 1.0,
            ..paper_point(0.0)
        };
        let t = find_threshold(&p, &ThresholdSearch::default()).unwrap();
        assert_eq!(t.kind, InstabilityKind::OscillatoryTransverse);
        assert_relative_eq!(t.e_t, 3.288_957_2, max_relative = 1e-6);
        // critical wavenumber lands exactly where diffraction cancels Δ1
        assert_relative_eq!(t.k_c, 2.0_f64.sqrt(), max_relative = 1e-5);
        assert_relative_eq!(t.lambda_imag.abs(), 1.761_846_2, max_relative = 1e-4);
    }

    #[test]
    fn self_pulsing_threshold_lies_above_transverse() {
        let p = paper_point(0.0);
        let search = ThresholdSearch {
            e_window: (0.5, 60.0),
            coarse_e_points: 96,
            ..Default::default()
        };
        let tr = find_threshold(&p, &search).unwrap();
        let sp = find_threshold(&p, &search.pinned_k0()).unwrap();
        assert_eq!(sp.kind, InstabilityKind::SelfPulsing);
        assert!(
            sp.e_t > tr.e_t,
            "self-pulsing at {} should exceed transverse at {}",
            sp.e_t,
            tr.e_t
        );
        assert!(sp.lambda_imag.abs() > 1e-3, "self-pulsing is a Hopf instability");
    }
}
