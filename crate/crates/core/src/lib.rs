//! Effective spin-chain physics for linear arrays of electrons held in
//! micro-Penning traps with local magnetic field gradients.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only computation:
//!
//! * [`trap`] derives trap frequencies, the gradient coupling and the
//!   pairwise Coulomb scale from applied fields.
//! * [`couplings`] turns those into dipolar `J^z`, `J^xy` matrices.
//! * [`spin_chain`] builds the XXZ chain Hamiltonians and evolves states.
//! * [`fidelity`] evaluates the thermal error budget of the channel.
//! * [`oracle`] holds brute-force validators for the effective model.
//!
//! All frequencies are angular (rad/s). Conversion to and from Hz happens
//! in the front-end crate.

#![no_std]

extern crate alloc;

pub mod constants;
pub mod couplings;
pub mod error;
pub mod fidelity;
pub mod linalg;
pub mod oracle;
pub mod quadrature;
pub mod spin_chain;
pub mod trap;

pub use constants::PhysicalConstants;
pub use couplings::{ChainGeometry, CouplingMatrix, CouplingOptions, Orientation};
pub use error::{Error, Result};
pub use fidelity::{FidelityReport, ThermalOccupations};
pub use trap::{AnomalyMode, AxialDrive, DerivedQuantities, RegimeReport, TrapParams};
