//! Numerical laboratory for the free-boundary incompressible Euler equations.
//!
//! The crate evolves a bounded fluid blob on an embedded Cartesian grid,
//! tracks its boundary as a triangulated surface, and evaluates continuation
//! functionals, energies and a suite of elliptic inequalities against
//! analytic oracles.

pub mod error;
pub mod evolution;
pub mod geometry;
pub mod harmonics;
pub mod harness;
pub mod diagnostics;
pub mod fields;
pub mod potential;

pub use error::{Error, Result};
