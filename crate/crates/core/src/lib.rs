//! Band spectra of quantized trigonometric Hamiltonians on the torus and
//! their semiclassical (regular and singular Bohr–Sommerfeld) predictions.

pub mod actions;
pub mod classical;
pub mod eigen;
pub mod error;
pub mod flow;
pub mod harness;
pub mod landau;
pub mod quantum;
pub mod regular_bs;
pub mod singular_bs;
pub mod special;
pub mod symbol;

pub use error::{Error, Result};
pub use symbol::{Hessian, Point2, TrigSymbol};
