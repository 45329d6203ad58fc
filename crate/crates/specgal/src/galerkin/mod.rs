//! The Galerkin system for a parameterized matrix equation and its
//! quadrature factorization.
//!
//! With basis polynomials `pi_a` for `a` in an index set and a quadrature
//! rule `{(lambda_b, nu_b)}`, the Galerkin conditions produce the linear
//! system `<pi pi^T x A> vec(X) = <pi x b>`. Collecting the weighted basis
//! evaluations `q_b = sqrt(nu_b) pi(lambda_b)` into the matrix `Q` gives the
//! factorization
//!
//! ```text
//! <pi pi^T x A> = (Q x I) A(lambda) (Q x I)^T
//! ```
//!
//! with `A(lambda)` block diagonal. [`GalerkinOperator`] applies the right
//! side matrix-free in three steps (multiply by `Q`, apply `A(lambda_b)`
//! pointwise, multiply by `Q^T`), so Krylov solvers only ever need products
//! `A(lambda) v` at fixed parameter points.

mod basis_quad;
mod operator;
mod solution;

pub use basis_quad::BasisQuadMatrix;
pub use operator::{CacheMode, GalerkinOperator, DENSE_ASSEMBLY_CAP};
pub use solution::{GalerkinSolution, SolveStatus};
