//! Forced waves in the triangular mass-spring lattice: dispersion surfaces,
//! stationary points, resonant asymptotics and a transient time-domain solver.

pub mod asymptotics;
pub mod compare;
pub mod critical;
pub mod dispersion;
pub mod error;
pub mod field;
pub mod lattice;
pub mod numeric;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
