//! Crank-Nicolson Galerkin finite elements for the Benjamin-Ono equation
//! `u_t + (u^2/2)_x - H u_xx = 0` on a truncated line `[-X, X]`.

pub mod assembly;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod reference;
pub mod stepper;

pub use error::{Error, Result};
