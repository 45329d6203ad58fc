//! Polynomial bases and quadrature on the parameter hypercube `[-1,1]^d`.
//!
//! The parameter space carries the uniform probability density, so the
//! univariate weight is `1/2` on `[-1,1]`, quadrature weights sum to one, and
//! the degree-zero polynomial is identically one. Multivariate basis
//! polynomials are products of univariate orthonormal Legendre polynomials,
//! indexed by [`MultiIndex`] tuples of per-dimension degrees.

mod legendre;
mod multi_index;
mod quadrature;

pub use legendre::{eval_orthonormal_legendre, eval_orthonormal_legendre_table, recurrence_b};
pub use multi_index::{BasisKind, EvalScratch, MultiIndex, MultiIndexSet};
pub use quadrature::{gauss_legendre_rule, GaussRule, TensorQuadrature, DEFAULT_POINT_CAP};
