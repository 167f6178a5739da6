//! Periodic 1D grid, near/far field representations, spectral helpers.
//!
//! Far-field (transverse-mode) amplitudes use the analysis convention
//!
//! ```text
//! a(k_n) = (dx/√(2π)) · Σ_m A(x_m) e^{+i k_n x_m},   k_n = 2πn/L,
//! ```
//!
//! so that every continuum formula holds on the grid with the substitution
//! δ(k−k′) → δ_nn′/Δk, Δk = 2π/L. In particular the commutator constant of
//! one discrete mode is κ = 1/(n_th·Δk) and a homogeneous field 𝒜 appears as
//! a(0) = 𝒜·L/√(2π).

use crate::error::{Error, Result};
use crate::steady::SteadyState;
use crate::C64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Periodic transverse grid: `n` points over length `length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    length: f64,
}

impl Grid1D {
    pub fn new(n: usize, length: f64) -> Result<Grid1D> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two >= 8, got {n}"
            )));
        }
        if !length.is_finite() || length <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "grid length must be positive, got {length}"
            )));
        }
        Ok(Grid1D { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Mode spacing Δk = 2π/L.
    pub fn dk(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    /// Signed wavenumber of FFT bin `mode` (natural FFT ordering:
    /// 0, Δk, …, (N/2−1)Δk, −(N/2)Δk, …, −Δk).
    pub fn wavenumber(&self, mode: usize) -> f64 {
        debug_assert!(mode < self.n);
        let half = self.n / 2;
        let signed = if mode < half {
            mode as isize
        } else {
            mode as isize - self.n as isize
        };
        signed as f64 * self.dk()
    }

    /// All wavenumbers in bin order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.wavenumber(m)).collect()
    }

    /// Bin holding the grid mode closest to `k`.
    pub fn mode_nearest(&self, k: f64) -> usize {
        let half = self.n as isize / 2;
        let idx = (k / self.dk()).round() as isize;
        let idx = idx.clamp(-half, half - 1);
        idx.rem_euclid(self.n as isize) as usize
    }

    /// Bin of −k for the bin of k (bin 0 and the Nyquist bin map to themselves).
    pub fn opposite_mode(&self, mode: usize) -> usize {
        debug_assert!(mode < self.n);
        (self.n - mode) % self.n
    }

    pub fn position(&self, m: usize) -> f64 {
        m as f64 * self.dx()
    }
}

/// Near-field envelope pair on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub a1: Vec<C64>,
    pub a2: Vec<C64>,
}

impl FieldPair {
    pub fn vacuum(grid: &Grid1D) -> FieldPair {
        FieldPair {
            a1: vec![C64::ZERO; grid.n()],
            a2: vec![C64::ZERO; grid.n()],
        }
    }

    pub fn homogeneous(grid: &Grid1D, s: &SteadyState) -> FieldPair {
        FieldPair {
            a1: vec![s.a1; grid.n()],
            a2: vec![s.a2; grid.n()],
        }
    }

    pub fn len(&self) -> usize {
        self.a1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a1.is_empty()
    }
}

/// Cached FFT plans plus scratch for the fixed analysis convention.
pub struct Spectral {
    grid: Grid1D,
    // rustfft "inverse" = Σ e^{+2πi mn/N}: the analysis direction here.
    analysis: Arc<dyn Fft<f64>>,
    synthesis: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
}

impl Spectral {
    pub fn new(grid: Grid1D) -> Spectral {
        let mut planner = FftPlanner::new();
        let analysis = planner.plan_fft_inverse(grid.n());
        let synthesis = planner.plan_fft_forward(grid.n());
        let scratch_len = analysis
            .get_outofplace_scratch_len()
            .max(synthesis.get_outofplace_scratch_len())
            .max(analysis.get_inplace_scratch_len())
            .max(synthesis.get_inplace_scratch_len());
        Spectral {
            grid,
            analysis,
            synthesis,
            scratch: vec![C64::ZERO; scratch_len],
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Far field a(k_n) from near field (out-of-place).
    pub fn far_field_into(&mut self, near: &[C64], out: &mut [C64]) {
        let norm = self.grid.dx() / (2.0 * std::f64::consts::PI).sqrt();
        out.copy_from_slice(near);
        self.analysis
            .process_with_scratch(out, &mut self.scratch);
        for v in out.iter_mut() {
            *v *= norm;
        }
    }

    /// Near field from far field (inverse of [`Self::far_field_into`]).
    pub fn near_field_into(&mut self, far: &[C64], out: &mut [C64]) {
        let norm = self.grid.dk() / (2.0 * std::f64::consts::PI).sqrt();
        out.copy_from_slice(far);
        self.synthesis
            .process_with_scratch(out, &mut self.scratch);
        for v in out.iter_mut() {
            *v *= norm;
        }
    }

    /// Raw unnormalized analysis transform, in place (Σ_m e^{+ik_n x_m}).
    pub fn raw_analysis_inplace(&mut self, buf: &mut [C64]) {
        self.analysis.process_with_scratch(buf, &mut self.scratch);
    }

    /// Raw unnormalized synthesis transform, in place (Σ_n e^{−ik_n x_m}).
    /// `raw_synthesis(raw_analysis(x)) = N·x`.
    pub fn raw_synthesis_inplace(&mut self, buf: &mut [C64]) {
        self.synthesis.process_with_scratch(buf, &mut self.scratch);
    }

    /// Spectral second derivative ∂²ₓ of a periodic field.
    pub fn second_derivative_into(&mut self, field: &[C64], out: &mut [C64]) {
        out.copy_from_slice(field);
        self.analysis.process_with_scratch(out, &mut self.scratch);
        let inv_n = 1.0 / self.grid.n() as f64;
        for (m, v) in out.iter_mut().enumerate() {
            let k = self.grid.wavenumber(m);
            *v *= -k * k * inv_n;
        }
        self.synthesis.process_with_scratch(out, &mut self.scratch);
    }
}
