//! Numerical tools for separability under half-space reflections, polarization
//! of sampled functions, and symmetry of ground states of a Choquard problem
//! on a ball with a Dirichlet Green kernel.

pub mod ball;
pub mod choquard;
pub mod circle;
pub mod error;
pub mod field;
pub mod geometry;
pub mod green;
pub mod io;
pub mod polarization;
pub mod report;
pub mod sphere;

pub use error::{Error, Result};
