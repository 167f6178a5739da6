//! Stochastic integration of the nonlinear Langevin equations and a
//! per-mode linearized reference integrator.
//!
//! The workhorse is an exponential (integrating-factor) Euler scheme: the
//! stiff linear part — decay, detuning and diffraction, diagonal in k — is
//! applied through its exact exponential, the nonlinear couplings and pump
//! through the first-order φ₁ filter, and the noise through an exact-decay
//! scaling. Fixed points of the deterministic flow are preserved exactly at
//! any step size, and an empty cavity reproduces the vacuum far-field
//! occupation exactly at every wavenumber.

mod linearized;
mod noise;
mod stepper;
mod trajectory;

pub use linearized::{simulate_linearized, simulate_linearized_k0, LinearizedConfig, LinearizedMoments};
pub use noise::sample_noise;
pub use stepper::SplitStepper;
pub use trajectory::{
    read_snapshots, run_ensemble, run_trajectory, InitialState, RunConfig, RunSummary, Snapshot,
    SnapshotHeader, SnapshotSink, SnapshotWriter, VecSink,
};
