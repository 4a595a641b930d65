//! Simulation-driven tumour morphology study.
//!
//! Steady heat conduction through a tissue block holding a prismatic tumour
//! is solved with linear tetrahedra; the top-surface temperature along the
//! centre line is summarised by a fourth-order Fourier fit, and a Gaussian
//! RBF network maps those ten coefficients back to the tumour's side or wing
//! count.

pub mod error;
pub mod fem;
pub mod geometry;
pub mod learn;
pub mod mesh;
pub mod par;
pub mod pipeline;
pub mod plot;
pub mod signature;

pub use error::{Error, Result};
