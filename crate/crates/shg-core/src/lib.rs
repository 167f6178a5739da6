//! Transverse quantum pattern formation in doubly resonant intracavity
//! second-harmonic generation (SHG), one transverse dimension.
//!
//! The model is a pair of scaled intracavity Langevin equations for the
//! fundamental (FH) and second-harmonic (SH) field envelopes `A1(x,t)`,
//! `A2(x,t)` on a periodic line:
//!
//! ```text
//! ∂t A1 = (−1 + iΔ1) A1 + A1* A2 + i ∂xx A1      + E + √(2/n_th) ξ1
//! ∂t A2 = (−γ + iΔ2) A2 − ½ A1²  + (i/2) ∂xx A2      + √(2γ/n_th) ξ2
//! ```
//!
//! in the Q representation, where ξ1 carries a phase-sensitive pseudo-noise
//! term ⟨ξ1ξ1⟩ = −A2/2 (valid while |A2| < 2) and ξ2 is circular. The crate
//! provides, in dependency order:
//!
//! - [`params`]: dimensionless parameter bundle and the rescaling from
//!   physical cavity numbers,
//! - [`steady`]: homogeneous steady states via the reduced real cubic,
//! - [`model`]: deterministic right-hand sides and the Q-noise validity check,
//! - [`linear`]: per-mode 4×4 linearization, growth rates, instability
//!   thresholds and detuning scans,
//! - [`correlations`]: semi-analytic stationary correlation spectra of the
//!   linearized theory (photon-number correlations and shot-noise-normalized
//!   sum/difference variances),
//! - [`sim`]: split-step stochastic integrator for the full nonlinear
//!   equations, snapshot streaming, and a per-mode linearized
//!   Ornstein–Uhlenbeck reference integrator,
//! - [`estimators`]: streaming far-field moment accumulation and the
//!   normalized-correlation / variance estimators with operator-ordering
//!   corrections.

pub mod correlations;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod linear;
pub mod model;
pub mod params;
pub mod sim;
pub mod steady;

pub use correlations::{
    correlation_spectrum, default_spectrum_ks, predict, predict_k0, CorrelationPrediction,
    CorrelationSpectrum, K0Prediction,
};
pub use error::{Error, Result};
pub use grid::{FieldPair, Grid1D};
pub use linear::{
    bifurcation_scan, find_threshold, InstabilityKind, ScanPoint, ThresholdResult,
    ThresholdSearch,
};
pub use params::{rescale_physical, Params, PhysicalParams, ScaleReport};
pub use steady::{steady_states, SteadyState};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
