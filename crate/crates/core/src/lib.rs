//! Wasserstein gradient flows in one dimension.
//!
//! The crate simulates free-energy gradient flows on the circle and on bounded
//! intervals, both as densities on a mesh and as weighted particle systems, and
//! checks the long-time behaviour predicted by LaSalle-type invariance
//! arguments: energy decay, the maximal-slope energy balance, convergence to the
//! stationary set and identification of omega-limits.

pub mod cli;
pub mod dynamics;
pub mod energetics;
pub mod equilibria;
pub mod error;
pub mod lasalle;
pub mod measures;

pub use error::{Error, Result};
