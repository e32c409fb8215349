//! Numerical engine for the photon statistics of a pulsed, resonantly driven
//! two-level emitter.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`] builds operators, Hamiltonians and Liouvillians for the emitter
//!   alone or together with up to two frequency-resolving sensor qubits.
//! - [`engine`] turns the master equation into a closed linear system for the
//!   moments of a complete operator basis and propagates it in time.
//! - [`correlators`] computes two-time correlation grids, time-integrated
//!   N-photon correlators, two-bin extensions, emission spectra and the
//!   normalized filtered second-order correlation.
//! - [`counting`] converts integrated correlators into photon-number and
//!   time-bin probabilities and purities.
//! - [`trajectories`] is an independent quantum-jump Monte Carlo simulator
//!   producing full counting statistics.
//!
//! All quantities are dimensionless, with the emitter decay rate setting the
//! unit of frequency.

pub mod correlators;
pub mod counting;
pub mod engine;
mod error;
pub mod model;
pub mod trajectories;

pub use error::{Error, Result};
pub use model::{ComplexMatrix, InitialState, JointModel, Mode, PulseEnvelope, Sensor, SensorBank, TwoLevelParams};
pub use num_complex::Complex64 as C64;
