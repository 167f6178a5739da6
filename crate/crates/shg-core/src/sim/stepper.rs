//! Exponential-Euler step for the nonlinear Langevin equations.
//!
//! Writing each field in far-field modes, the update over one step dt is
//!
//! ```text
//! Â_j(k) ← e^{z_jk} Â_j(k) + φ₁(z_jk)·dt·N̂_j(k) + c_j·dt·amp_j·ξ̂_j(k)
//! ```
//!
//! with z_jk = σ_j(k)·dt the exact linear symbol (decay + detuning +
//! diffraction), φ₁(z) = (e^z − 1)/z, N_j the nonlinear coupling plus pump,
//! amp_j the Langevin noise strength, and c_j = √[(1−e^{−2Γ_j dt})/(2Γ_j dt)]
//! the exact-decay noise scaling (Γ1 = 1, Γ2 = γ; the decay rates are
//! k-independent, so c_j is a scalar).
//!
//! Properties relied on by the validation suite:
//! - a deterministic fixed point (e.g. a steady state) is preserved exactly,
//!   because the update adds φ₁(z)·dt·(linear + nonlinear) = 0 per mode;
//! - with the pump off, the scheme samples the vacuum far field exactly:
//!   each mode is an Ornstein–Uhlenbeck process whose discrete stationary
//!   variance equals amp²/(2Γ·dk) = 1/(n_th·dk) at every k and dt;
//! - noise is evaluated at the step start (Ito convention), with the
//!   A2-dependent pseudo-noise sampled per grid cell.

use crate::error::{Error, Result};
use crate::grid::{FieldPair, Grid1D, Spectral};
use crate::params::Params;
use crate::sim::noise::sample_noise;
use crate::C64;
use rand::Rng;

/// φ₁(z) = (e^z − 1)/z, series-evaluated near the origin.
fn phi1(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        C64::ONE + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        (z.exp() - C64::ONE) / z
    }
}

/// Stepper state: precomputed per-mode propagators and work buffers.
pub struct SplitStepper {
    params: Params,
    dt: f64,
    spectral: Spectral,
    /// e^{σ_j(k)·dt} in natural FFT mode order.
    exp1: Vec<C64>,
    exp2: Vec<C64>,
    /// φ₁(σ_j(k)·dt)·dt / n (synthesis normalization folded in).
    phi1_dt: Vec<C64>,
    phi2_dt: Vec<C64>,
    inv_n: f64,
    /// dt·amp_j·c_j·s, the full per-cell noise prefactor.
    noise_pref1: f64,
    noise_pref2: f64,
    // work buffers
    work1: Vec<C64>,
    work2: Vec<C64>,
    rhs1: Vec<C64>,
    rhs2: Vec<C64>,
    noise_inc1: Vec<C64>,
    noise_inc2: Vec<C64>,
}

impl SplitStepper {
    pub fn new(params: Params, grid: Grid1D, dt: f64) -> Result<SplitStepper> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        let n = grid.n();
        let mut exp1 = Vec::with_capacity(n);
        let mut exp2 = Vec::with_capacity(n);
        let mut phi1_dt = Vec::with_capacity(n);
        let mut phi2_dt = Vec::with_capacity(n);
        let inv_n = 1.0 / n as f64;
        for m in 0..n {
            let k = grid.wavenumber(m);
            let z1 = C64::new(-1.0, params.delta1 - k * k) * dt;
            let z2 = C64::new(-params.gamma, params.delta2 - 0.5 * k * k) * dt;
            exp1.push(z1.exp());
            exp2.push(z2.exp());
            phi1_dt.push(phi1(z1) * dt * inv_n);
            phi2_dt.push(phi1(z2) * dt * inv_n);
        }
        let gamma = params.gamma;
        let decay_scale = |g: f64| ((1.0 - (-2.0 * g * dt).exp()) / (2.0 * g * dt)).sqrt();
        let s = 1.0 / (grid.dx() * dt).sqrt();
        let noise_pref1 = dt * (2.0 / params.n_th).sqrt() * decay_scale(1.0) * s;
        let noise_pref2 = dt * (2.0 * gamma / params.n_th).sqrt() * decay_scale(gamma) * s;
        Ok(SplitStepper {
            params,
            dt,
            spectral: Spectral::new(grid),
            exp1,
            exp2,
            phi1_dt,
            phi2_dt,
            inv_n,
            noise_pref1,
            noise_pref2,
            work1: vec![C64::ZERO; n],
            work2: vec![C64::ZERO; n],
            rhs1: vec![C64::ZERO; n],
            rhs2: vec![C64::ZERO; n],
            noise_inc1: vec![C64::ZERO; n],
            noise_inc2: vec![C64::ZERO; n],
        })
    }

    pub fn grid(&self) -> &Grid1D {
        self.spectral.grid()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn spectral(&mut self) -> &mut Spectral {
        &mut self.spectral
    }

    /// Deterministic part of the update (pump on, noise off).
    fn advance(&mut self, fields: &mut FieldPair) {
        let n = fields.len();
        let pump = C64::from(self.params.pump);
        for m in 0..n {
            let a1 = fields.a1[m];
            let a2 = fields.a2[m];
            self.rhs1[m] = a1.conj() * a2 + pump;
            self.rhs2[m] = -0.5 * a1 * a1;
        }
        self.work1.copy_from_slice(&fields.a1);
        self.work2.copy_from_slice(&fields.a2);
        self.spectral.raw_analysis_inplace(&mut self.work1);
        self.spectral.raw_analysis_inplace(&mut self.work2);
        self.spectral.raw_analysis_inplace(&mut self.rhs1);
        self.spectral.raw_analysis_inplace(&mut self.rhs2);
        for m in 0..n {
            // inv_n folded into phi*_dt; exp term normalized here
            self.work1[m] = self.inv_n * self.exp1[m] * self.work1[m] + self.phi1_dt[m] * self.rhs1[m];
            self.work2[m] = self.inv_n * self.exp2[m] * self.work2[m] + self.phi2_dt[m] * self.rhs2[m];
        }
        self.spectral.raw_synthesis_inplace(&mut self.work1);
        self.spectral.raw_synthesis_inplace(&mut self.work2);
        fields.a1.copy_from_slice(&self.work1);
        fields.a2.copy_from_slice(&self.work2);
    }

    /// One noise-free step.
    pub fn step_deterministic(&mut self, fields: &mut FieldPair) {
        self.advance(fields);
    }

    /// One full stochastic step. `time` is only used to annotate positivity
    /// failures. Noise coefficients are evaluated at the step start.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        fields: &mut FieldPair,
        rng: &mut R,
        time: f64,
    ) -> Result<()> {
        let n = fields.len();
        // noise coefficients depend on A2 at the step start, so draw all
        // increments before the deterministic update
        for m in 0..n {
            let a2 = fields.a2[m];
            let Some((xi1, xi2)) = sample_noise(rng, a2, 1.0) else {
                return Err(Error::PositivityViolation {
                    index: m,
                    value: a2.norm(),
                    time,
                });
            };
            self.noise_inc1[m] = self.noise_pref1 * xi1;
            self.noise_inc2[m] = self.noise_pref2 * xi2;
        }
        self.advance(fields);
        for m in 0..n {
            fields.a1[m] += self.noise_inc1[m];
            fields.a2[m] += self.noise_inc2[m];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::steady_states;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(pump: f64) -> Params {
        Params {
            delta1: 2.0,
            delta2: -2.0,
            gamma: 0.5,
            pump,
            n_th: 1e8,
        }
    }

    #[test]
    fn steady_state_is_a_fixed_point_of_the_deterministic_map() {
        let p = params(6.0);
        let grid = Grid1D::new(64, 50.0).unwrap();
        let s = steady_states(&p).unwrap()[0];
        let mut fields = FieldPair::homogeneous(&grid, &s);
        let mut stepper = SplitStepper::new(p, grid, 1e-3).unwrap();
        for _ in 0..500 {
            stepper.step_deterministic(&mut fields);
        }
        let dev = fields
            .a1
            .iter()
            .map(|a| (a - s.a1).norm())
            .chain(fields.a2.iter().map(|a| (a - s.a2).norm()))
            .fold(0.0, f64::max);
        assert!(dev < 1e-12, "fixed point drifted by {dev}");
    }

    #[test]
    fn saturated_pseudo_noise_is_reported_with_location() {
        let p = params(1.0);
        let grid = Grid1D::new(16, 10.0).unwrap();
        let mut fields = FieldPair::vacuum(&grid);
        fields.a2[5] = C64::new(2.5, 0.0);
        let mut stepper = SplitStepper::new(p, grid, 1e-3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        match stepper.step(&mut fields, &mut rng, 1.25) {
            Err(Error::PositivityViolation { index, value, time }) => {
                assert_eq!(index, 5);
                assert!((value - 2.5).abs() < 1e-12);
                assert!((time - 1.25).abs() < 1e-12);
            }
            other => panic!("expected positivity violation, got {other:?}"),
        }
    }
}
