//! Numerical laboratory for Maslov-type indices of Hamiltonian flows.
//!
//! Linear symplectic algebra, Robbin–Salamon indices of Lagrangian and
//! symplectic paths, variational integration, asymptotic (mean) indices of
//! orbits and invariant measures, electromagnetic Lagrangians on tori and
//! ℝⁿ, loop actions and second variations, and the β-function of
//! periodic-orbit records.

pub mod asymptotic;
pub mod error;
pub mod flow;
pub mod halfint;
pub mod loops;
pub mod maslov;
pub mod periodic;
mod linalg;
pub mod symplectic;
pub mod systems;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};
pub use halfint::HalfInt;
pub use tol::Tolerances;
