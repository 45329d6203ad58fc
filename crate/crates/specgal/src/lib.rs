//! Spectral Galerkin approximation of parameterized matrix equations.
//!
//! Given a matrix-valued function `A(s)` and a vector-valued function `b(s)`
//! on the hypercube `s in [-1,1]^d`, this crate computes a polynomial
//! surrogate `x(s) ~ X pi(s)` for the solution of `A(s) x(s) = b(s)` by a
//! Galerkin projection onto a basis of product Legendre polynomials, with all
//! integrals replaced by a tensor-product Gauss-Legendre quadrature rule.
//!
//! The Galerkin matrix factors as `(Q x I) A(lambda) (Q x I)^T`, where `Q`
//! holds weighted basis evaluations at the quadrature points and `A(lambda)`
//! is block diagonal with blocks `A(lambda_beta)`. The factorization is never
//! formed explicitly: [`galerkin::GalerkinOperator`] applies it using only
//! products `A(lambda) v`, which lets Krylov methods ([`solvers`]) run
//! matrix-free on top of any existing solver for the fixed-parameter problem.
//!
//! - [`basis`]: multi-index sets, orthonormal Legendre polynomials, and
//!   tensor-product Gauss-Legendre quadrature.
//! - [`galerkin`]: the `Q` matrix, the matrix-free operator, right-hand side
//!   assembly, a dense assembly oracle, and spectral bounds.
//! - [`solvers`]: CG, MINRES, and BiCGStab with block-diagonal
//!   preconditioners built from a single parameter point or the quadrature
//!   mean.
//! - [`problems`]: built-in systems — random affine fixtures, an elliptic
//!   diffusion problem with a Karhunen-Loeve log-coefficient, and a
//!   nonsymmetric advection-diffusion problem.
//! - [`verify`]: self-contained consistency checks against dense oracles.
//!
//! ```
//! use specgal::basis::{MultiIndexSet, TensorQuadrature};
//! use specgal::galerkin::{BasisQuadMatrix, GalerkinOperator};
//! use specgal::problems::AffineSystem;
//! use specgal::solvers::{solve, PreconditionerSpec, SolverConfig, SolverMethod};
//! use std::sync::Arc;
//!
//! let system = Arc::new(AffineSystem::random_spd(6, 2, 7));
//! let basis = MultiIndexSet::total_degree(2, 3)?;
//! let rule = TensorQuadrature::tensor(&[5, 5])?;
//! let q = BasisQuadMatrix::build(basis, rule, 1e-10)?;
//! let op = GalerkinOperator::new(q, system.clone())?;
//!
//! let rhs = op.assemble_rhs()?;
//! let precond = PreconditionerSpec::Midpoint.build(system.as_ref(), op.quadrature())?;
//! let config = SolverConfig::new(SolverMethod::Minres).with_rtol(1e-10);
//! let solution = solve(&op, rhs.as_slice(), &config, Some(&precond))?;
//! assert!(solution.converged());
//!
//! let (mean, variance) = solution.moments();
//! assert_eq!(mean.len(), 6);
//! assert!(variance.iter().all(|v| *v >= 0.0));
//! # Ok::<(), specgal::Error>(())
//! ```

pub mod basis;
mod error;
pub mod galerkin;
pub mod linalg;
pub mod problems;
pub mod solvers;
pub mod system;
pub mod verify;

pub use error::{Error, Result};
pub use system::{AssembledMatrix, ParameterizedSystem};
