//! Two identical fermions scattering in a quasi-1D channel under a pulsed
//! sinusoidal potential.
//!
//! The crate propagates single-particle packets with Crank-Nicolson,
//! cross-checks the momentum transfer against an interaction-picture
//! ladder integrator, propagates the antisymmetric two-particle state with
//! a Strang-split Crank-Nicolson scheme, and tracks the von Neumann entropy
//! of the one-particle reduced density matrix.

pub mod config;
pub mod entanglement;
pub mod error;
pub mod io;
pub mod kinetic;
pub mod ladder;
pub mod parallel;
pub mod potentials;
pub mod run;
pub mod solver1d;
pub mod solver2d;
pub mod spectral;
pub mod tridiag;
pub mod units;

pub use error::{Error, Result};
pub use parallel::Execution;
