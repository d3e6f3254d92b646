//! Spin-torque MRAM as approximate storage for neural-network weights.
//!
//! The stack, bottom-up:
//!
//! - [`switching`]: gamma switching-time statistics of one junction and the
//!   BER ↔ pulse-duration conversion, fitted to published operating points.
//! - [`energy`] and [`variability`]: per-pulse programming energy and a
//!   log-normal device population that turns a target array BER into the
//!   pulse actually required.
//! - [`memory`]: 16-bit fixed-point words whose writes fail per bit with a
//!   programmed BER, leaving the old bit in place, with an energy ledger.
//! - [`mnist`] and [`nn`]: the MNIST loader and a 784-300-10 tanh MLP whose
//!   parameters live in the approximate store during training.
//! - [`experiment`]: multi-seed training runs and their CSV rows.

pub mod device;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod gamma;
pub mod memory;
pub mod mnist;
pub mod models;
pub mod nn;
mod solve;
pub mod switching;
pub mod variability;

pub use device::DeviceParams;
pub use energy::EnergyModel;
pub use error::{CalibrationError, DomainError, SolveError};
pub use memory::{ApproxWeightStore, FixedPointFormat, ProgrammingProfile, Scheme};
pub use models::{CalibratedModels, CalibrationInputs};
pub use switching::{Anchor, PulseSpec, SwitchingModel};
pub use variability::VariabilityModel;
