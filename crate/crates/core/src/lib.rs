//! Exact quantum and semiclassical dynamics of a driven dissipative Kerr
//! (anharmonic) oscillator at the level of a few quanta.
//!
//! The crate is organised around the physical model and the engines that
//! evolve it:
//!
//! - [`model`]: parameters, drive envelopes, truncated Fock space, Hamiltonian
//!   and Lindblad operators.
//! - [`master`]: Lindblad master-equation evolution, steady states and
//!   density-matrix observables, including the closed-form steady-state
//!   excitation number.
//! - [`trajectories`]: quantum state diffusion trajectories and seeded
//!   ensembles.
//! - [`wigner`]: Wigner functions on phase-space grids, peaks and negativity.
//! - [`semiclassical`]: the classical amplitude equation, its steady states,
//!   hysteresis, Poincaré sections and Lyapunov exponents.
//!
//! All rates are measured in units of the dissipation rate `gamma` and all
//! times in units of `1/gamma`.

// Validation is written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hypergeometric;
pub mod master;
pub mod model;
pub mod ode;
pub mod semiclassical;
pub mod trajectories;
pub mod wigner;

mod banded;

pub use error::{Error, Result};
pub use master::{DensityMatrix, NumberDistribution};
pub use model::{DriveEnvelope, FockSpace, ModelParams, PulseTrain, C64};
pub use ode::SolverConfig;
pub use semiclassical::DampingConvention;
pub use trajectories::StateVector;
pub use wigner::{GridSpec, WignerGrid};
