//! Matrix-free Krylov solvers and block-diagonal preconditioners.
//!
//! Premultiplying the factored Galerkin matrix by `I x P^{-1}` commutes the
//! preconditioner past `Q x I`, so one `N x N` matrix `P` conditions the
//! parameterized system at every quadrature point simultaneously. The
//! preconditioner kinds here mirror that observation: `P = A(lambda*)` at a
//! chosen point (midpoint, random, extreme-eigenvalue), the quadrature mean
//! `P = <A>`, or the diagonal of `A(lambda*)`.

mod krylov;
mod point_search;
mod preconditioner;

pub use krylov::{solve, SolverConfig, SolverMethod};
pub use point_search::{
    extreme_eigenvalues_iterative, find_largest_eig_point, find_smallest_eig_point,
    PointSearchOptions, PointSelectionReport,
};
pub use preconditioner::{
    apply_block_preconditioner, BlockPreconditioner, Factorization, PreconditionerSpec,
};
