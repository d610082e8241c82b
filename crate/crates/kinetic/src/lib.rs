//! Numerical library for the Boltzmann collision operator and its
//! linearization L = nu - K for mixtures of monatomic and polyatomic gases
//! with a continuous internal-energy variable.

pub mod config;
pub mod error;
pub mod galerkin;
pub mod geometry;
pub mod linearized;
pub mod mixture;
pub mod operator;
pub mod quadrature;
pub mod xsection;

pub use error::{KineticError, Result};
