//! Homogeneous steady states.
//!
//! With ∂x = ∂t = 0 and noise off, the SH adiabatically follows the FH,
//! `A2 = A1² / (2(−γ + iΔ2))`, and the FH intensity I = |A1|² solves the
//! real cubic
//!
//! ```text
//! I · [ (1 + aγI)² + (Δ1 − aΔ2 I)² ] = E²,     a = 1 / (2(γ² + Δ2²)),
//! ```
//!
//! which has one or three non-negative roots (bistability at large
//! same-sign detunings). The complex fields are reconstructed exactly from
//! each root: `A1 = E / [(1 − iΔ1) + a(γ + iΔ2) I]`.

use crate::error::Result;
use crate::params::Params;
use crate::C64;
use serde::{Deserialize, Serialize};

/// One homogeneous steady-state branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// FH amplitude.
    pub a1: C64,
    /// SH amplitude.
    pub a2: C64,
    /// FH intensity |A1|² (the cubic root this branch came from).
    pub intensity: f64,
    /// True when this root is part of a near-degenerate pair (fold point):
    /// branch identity is not numerically meaningful there.
    pub marginal: bool,
}

impl SteadyState {
    /// |A2| — distance to the Q-noise positivity boundary is `2 − |A2|`.
    pub fn sh_modulus(&self) -> f64 {
        self.a2.norm()
    }

    /// The empty-cavity state (E = 0).
    pub fn vacuum() -> SteadyState {
        SteadyState {
            a1: C64::ZERO,
            a2: C64::ZERO,
            intensity: 0.0,
            marginal: false,
        }
    }
}

/// Coefficient a = 1/(2(γ² + Δ2²)) of the adiabatic SH response.
fn sh_response(p: &Params) -> f64 {
    1.0 / (2.0 * (p.gamma * p.gamma + p.delta2 * p.delta2))
}

/// The cubic f(I) = c3 I³ + c2 I² + c1 I − E² whose roots are steady FH intensities.
pub fn intensity_cubic(p: &Params) -> [f64; 4] {
    let a = sh_response(p);
    [
        a / 2.0,
        2.0 * a * (p.gamma - p.delta1 * p.delta2),
        1.0 + p.delta1 * p.delta1,
        -p.pump * p.pump,
    ]
}

fn eval_cubic(c: &[f64; 4], x: f64) -> f64 {
    ((c[0] * x + c[1]) * x + c[2]) * x + c[3]
}

fn eval_cubic_deriv(c: &[f64; 4], x: f64) -> f64 {
    (3.0 * c[0] * x + 2.0 * c[1]) * x + c[2]
}

/// All real roots of the monic-normalized cubic, Newton-polished.
fn cubic_roots(c: &[f64; 4]) -> Vec<f64> {
    // Depressed form: x = t − b/3 with monic coefficients.
    let b = c[1] / c[0];
    let cc = c[2] / c[0];
    let d = c[3] / c[0];
    let p = cc - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;
    let shift = -b / 3.0;
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);

    let mut roots = if disc > 0.0 {
        // one real root (Cardano, cancellation-safe branch)
        let s = disc.sqrt();
        let u = -q / 2.0 + s;
        let v = -q / 2.0 - s;
        let t = u.signum() * u.abs().cbrt() + v.signum() * v.abs().cbrt();
        vec![t + shift]
    } else {
        // three real roots (trigonometric form)
        let m = 2.0 * (-p / 3.0).sqrt();
        if m == 0.0 {
            vec![shift]
        } else {
            let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
            let phi = arg.acos() / 3.0;
            (0..3)
                .map(|j| m * (phi - 2.0 * std::f64::consts::PI * j as f64 / 3.0).cos() + shift)
                .collect()
        }
    };

    for r in roots.iter_mut() {
        for _ in 0..4 {
            let f = eval_cubic(c, *r);
            let df = eval_cubic_deriv(c, *r);
            if df != 0.0 {
                let step = f / df;
                *r -= step;
                if step.abs() <= 1e-15 * r.abs().max(1.0) {
                    break;
                }
            }
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

/// All homogeneous steady states, sorted by FH intensity (ascending).
///
/// Near a fold the two merging branches are both returned with
/// `marginal = true` rather than being deduplicated.
pub fn steady_states(p: &Params) -> Result<Vec<SteadyState>> {
    p.validate()?;
    if p.pump == 0.0 {
        return Ok(vec![SteadyState::vacuum()]);
    }

    let c = intensity_cubic(p);
    let a = sh_response(p);
    let mut intensities: Vec<f64> = cubic_roots(&c)
        .into_iter()
        .filter(|&i| i >= -1e-12)
        .map(|i| i.max(0.0))
        .collect();
    intensities.dedup_by(|x, y| (*x - *y).abs() < f64::EPSILON * x.abs().max(1.0));

    let fold_tol = 1e-10;
    let mut out = Vec::with_capacity(intensities.len());
    for (idx, &i) in intensities.iter().enumerate() {
        let near_prev = idx > 0 && (i - intensities[idx - 1]).abs() <= fold_tol * i.max(1.0);
        let near_next = idx + 1 < intensities.len()
            && (intensities[idx + 1] - i).abs() <= fold_tol * i.max(1.0);
        let den = C64::new(1.0, -p.delta1) + a * C64::new(p.gamma, p.delta2) * i;
        let a1 = p.pump / den;
        let a2 = a1 * a1 / (2.0 * C64::new(-p.gamma, p.delta2));
        out.push(SteadyState {
            a1,
            a2,
            intensity: i,
            marginal: near_prev || near_next,
        });
    }
    Ok(out)
}
