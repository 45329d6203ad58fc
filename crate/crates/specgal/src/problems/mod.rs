//! Built-in parameterized systems.
//!
//! These serve two purposes: seeded random affine systems are the oracle
//! fixtures for the factorization and solver tests, and the two PDE systems
//! (elliptic diffusion with a Karhunen-Loeve log-coefficient, and a
//! nonsymmetric advection-diffusion equation) are the desk-scale benchmark
//! problems for the preconditioner studies.

mod advection;
mod affine;
mod diffusion;
mod grid;
mod kl;

pub use advection::AdvectionDiffusionProblem;
pub use affine::{AffineSystem, IdentitySystem};
pub use diffusion::DiffusionProblem;
pub use grid::Grid2d;
pub use kl::{kl_decompose, KlField};
