//! Phase-space dynamics of open quantum systems: Gaussian Wigner functions
//! propagated by semiclassical and doubled-phase-space flows, checked against
//! exact quantum master-equation and quantum-jump references.

pub mod error;
pub mod events;
pub mod gaussian;
pub mod harness;
pub mod linalg;
pub mod doubled;
pub mod ode;
pub mod quantum;
pub mod semiclassical;
pub mod symbols;

pub use error::{Error, Result};
