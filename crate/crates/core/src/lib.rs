//! Simulation engine for periodically driven few-body spin chains.
//!
//! The crate builds chain Hamiltonians for two physical realizations — a
//! strongly interacting two-component trapped gas and a small qubit circuit
//! reduced to Ising couplings — drives them with periodic (possibly
//! imperfect and inhomogeneous) spin-flip pulses, evolves pure states
//! exactly or density matrices under relaxation/dephasing noise, and
//! extracts the magnetization, initial-state overlap, and the subharmonic
//! spectral response that signals a discrete time crystal.

pub mod drive;
pub mod error;
pub mod evolve;
pub mod linalg;
pub mod models;
pub mod observables;
pub mod spin;

pub use error::{Error, Result};
