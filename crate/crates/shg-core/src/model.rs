//! Deterministic right-hand sides and the Q-noise validity check.

use crate::grid::{FieldPair, Spectral};
use crate::params::Params;
use crate::steady::SteadyState;
use crate::C64;
use serde::{Deserialize, Serialize};

/// Drift of the homogeneous (k = 0, no diffraction) system.
pub fn rhs_homogeneous(p: &Params, a1: C64, a2: C64) -> (C64, C64) {
    let r1 = C64::new(-1.0, p.delta1) * a1 + a1.conj() * a2 + p.pump;
    let r2 = C64::new(-p.gamma, p.delta2) * a2 - 0.5 * a1 * a1;
    (r1, r2)
}

/// Drift of the full spatial system, diffraction evaluated spectrally.
pub fn rhs_grid(p: &Params, sp: &mut Spectral, fields: &FieldPair) -> FieldPair {
    let n = fields.len();
    let mut d2a1 = vec![C64::ZERO; n];
    let mut d2a2 = vec![C64::ZERO; n];
    sp.second_derivative_into(&fields.a1, &mut d2a1);
    sp.second_derivative_into(&fields.a2, &mut d2a2);

    let mut out = FieldPair {
        a1: Vec::with_capacity(n),
        a2: Vec::with_capacity(n),
    };
    for m in 0..n {
        let a1 = fields.a1[m];
        let a2 = fields.a2[m];
        let (mut r1, mut r2) = rhs_homogeneous(p, a1, a2);
        r1 += C64::i() * d2a1[m];
        r2 += C64::i() * 0.5 * d2a2[m];
        out.a1.push(r1);
        out.a2.push(r2);
    }
    out
}

/// Whether the Q-representation noise stays positive-definite (|A2| < 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QValidity {
    pub valid: bool,
    /// max_x |A2(x)|.
    pub max_sh_modulus: f64,
    /// 2 − max |A2|; negative when invalid.
    pub margin: f64,
}

/// Validity of the phase-sensitive noise construction over an SH field.
pub fn q_validity(a2: &[C64]) -> QValidity {
    let max_sh_modulus = a2.iter().map(|v| v.norm()).fold(0.0, f64::max);
    QValidity {
        valid: max_sh_modulus < 2.0,
        max_sh_modulus,
        margin: 2.0 - max_sh_modulus,
    }
}

/// Validity at a homogeneous steady state.
pub fn q_validity_steady(s: &SteadyState) -> QValidity {
    q_validity(std::slice::from_ref(&s.a2))
}
