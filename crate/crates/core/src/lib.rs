//! Phase synchronization of a laser-driven qubit coupled to an Ohmic bath.
//!
//! The qubit evolves under a time-local second-order master equation whose
//! memory kernels are integrated alongside the density matrix. On top of the
//! dynamics sit the synchronization observables (Husimi Q-function, shifted
//! phase distribution and its maximum), parameter sweeps that map out Arnold
//! tongues, and a recurrence classifier for lab-frame Bloch trajectories.

pub mod bath;
pub mod error;
pub mod integrator;
pub mod limit_cycle;
pub mod matrix;
pub mod model;
pub mod observables;
pub mod parallel;
pub mod propagator;
pub mod sweep;

pub use error::{Error, Result};
