//! Stochastic Galerkin finite elements for parametric diffusion problems with
//! non-affine coefficients, hierarchical error estimation and adaptivity.

pub mod adaptive;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod fem;
pub mod galerkin;
pub mod polychaos;
pub mod randfield;

pub use error::{Result, SgfemError};
