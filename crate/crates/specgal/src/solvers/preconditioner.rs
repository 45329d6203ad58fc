use std::fmt;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::basis::TensorQuadrature;
use crate::error::{Error, Result};
use crate::linalg::BandedCholesky;
use crate::solvers::point_search::{
    find_largest_eig_point, find_smallest_eig_point, PointSearchOptions, PointSelectionReport,
};
use crate::system::{AssembledMatrix, ParameterizedSystem};

/// Which single matrix `P` the block preconditioner `I x P^{-1}` is built
/// from.
#[derive(Debug, Clone, PartialEq)]
pub enum PreconditionerSpec {
    None,
    /// `P = A(0, ..., 0)`, the midpoint of the hypercube.
    Midpoint,
    /// `P = <A>` approximated with a fresh tensor rule of the given order
    /// per dimension.
    Mean { order: usize },
    /// `P = A(s_r)` at a seeded uniform random point.
    Random { seed: u64 },
    /// `P = A(lambda*)` at the candidate point maximizing the largest
    /// eigenvalue.
    LargestEig,
    /// `P = A(lambda*)` at the candidate point minimizing the smallest
    /// eigenvalue.
    SmallestEig,
    /// `P = A(lambda)` at an explicit point.
    FixedPoint(Vec<f64>),
    /// `P = diag(A(lambda))` at an explicit point.
    Diagonal(Vec<f64>),
}

impl fmt::Display for PreconditionerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreconditionerSpec::None => write!(f, "none"),
            PreconditionerSpec::Midpoint => write!(f, "midpoint"),
            PreconditionerSpec::Mean { order } => write!(f, "mean({order})"),
            PreconditionerSpec::Random { seed } => write!(f, "random(seed={seed})"),
            PreconditionerSpec::LargestEig => write!(f, "largest-eig"),
            PreconditionerSpec::SmallestEig => write!(f, "smallest-eig"),
            PreconditionerSpec::FixedPoint(p) => write!(f, "fixed-point({p:?})"),
            PreconditionerSpec::Diagonal(p) => write!(f, "diagonal({p:?})"),
        }
    }
}

/// A factorization of `P`, specialized by structure.
pub enum Factorization {
    /// Dense Cholesky for symmetric positive definite `P`.
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    /// Banded Cholesky for sparse symmetric positive definite `P`.
    Banded(BandedCholesky),
    /// Dense LU with partial pivoting for general `P`.
    Lu {
        lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
        n: usize,
    },
    /// Divide by the stored diagonal.
    Diagonal(DVector<f64>),
}

impl Factorization {
    /// Solves `P x = rhs` in place for one `N`-vector.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        match self {
            Factorization::Cholesky(chol) => {
                let mut view = nalgebra::DVectorViewMut::from_slice(rhs, rhs.len());
                chol.solve_mut(&mut view);
            }
            Factorization::Banded(chol) => chol.solve_in_place(rhs),
            Factorization::Lu { lu, .. } => {
                let mut view = nalgebra::DVectorViewMut::from_slice(rhs, rhs.len());
                let ok = lu.solve_mut(&mut view);
                debug_assert!(ok, "LU solve on factorized matrix cannot fail");
            }
            Factorization::Diagonal(diag) => {
                for (x, &d) in rhs.iter_mut().zip(diag.iter()) {
                    *x /= d;
                }
            }
        }
    }

    fn n(&self) -> usize {
        match self {
            Factorization::Cholesky(chol) => chol.l_dirty().nrows(),
            Factorization::Banded(chol) => chol.n(),
            Factorization::Lu { n, .. } => *n,
            Factorization::Diagonal(diag) => diag.len(),
        }
    }
}

impl fmt::Debug for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self {
            Factorization::Cholesky(_) => "Cholesky",
            Factorization::Banded(_) => "BandedCholesky",
            Factorization::Lu { .. } => "Lu",
            Factorization::Diagonal(_) => "Diagonal",
        };
        write!(f, "Factorization::{kind}(n={})", self.n())
    }
}

/// A resolved and factorized block-diagonal preconditioner `I x P^{-1}`.
#[derive(Debug)]
pub struct BlockPreconditioner {
    spec: PreconditionerSpec,
    factorization: Factorization,
    point: Option<Vec<f64>>,
    search_report: Option<PointSelectionReport>,
    setup_seconds: f64,
}

impl BlockPreconditioner {
    pub fn spec(&self) -> &PreconditionerSpec {
        &self.spec
    }

    pub fn factorization(&self) -> &Factorization {
        &self.factorization
    }

    /// The parameter point `P` was assembled at, when one exists.
    pub fn point(&self) -> Option<&[f64]> {
        self.point.as_deref()
    }

    /// Report from the eigenvalue point search, for the search-based kinds.
    pub fn search_report(&self) -> Option<&PointSelectionReport> {
        self.search_report.as_ref()
    }

    pub fn setup_seconds(&self) -> f64 {
        self.setup_seconds
    }

    pub fn n(&self) -> usize {
        self.factorization.n()
    }

    /// Applies `(I x P^{-1})` to a stacked `N x K` vector in place.
    pub fn apply_inv_in_place(&self, v: &mut [f64]) {
        let n = self.n();
        assert_eq!(v.len() % n, 0, "vector length must be a multiple of N");
        for block in v.chunks_mut(n) {
            self.factorization.solve_in_place(block);
        }
    }
}

/// Applies a factorized block preconditioner to a stacked vector, returning
/// `(I x P^{-1}) v`.
pub fn apply_block_preconditioner(fact: &Factorization, v: &[f64]) -> Vec<f64> {
    let n = fact.n();
    assert_eq!(v.len() % n, 0, "vector length must be a multiple of N");
    let mut out = v.to_vec();
    for block in out.chunks_mut(n) {
        fact.solve_in_place(block);
    }
    out
}

impl PreconditionerSpec {
    /// Resolves the spec to a matrix `P`, factorizes it, and records setup
    /// time. All kinds require explicit assembly from the system.
    pub fn build(
        &self,
        system: &dyn ParameterizedSystem,
        rule: &TensorQuadrature,
    ) -> Result<BlockPreconditioner> {
        self.build_with_options(system, rule, &PointSearchOptions::default())
    }

    pub fn build_with_options(
        &self,
        system: &dyn ParameterizedSystem,
        rule: &TensorQuadrature,
        search: &PointSearchOptions,
    ) -> Result<BlockPreconditioner> {
        let start = Instant::now();
        if !system.supports_assemble() {
            return Err(Error::AssembleUnsupported);
        }
        let d = system.dim_parameters();
        if rule.dim() != d {
            return Err(Error::DimensionMismatch {
                context: "preconditioner quadrature rule",
                expected: d,
                got: rule.dim(),
            });
        }
        let mut search_report = None;

        let (point, matrix): (Option<Vec<f64>>, Option<AssembledMatrix>) = match self {
            PreconditionerSpec::None => {
                return Err(Error::InvalidArgument(
                    "cannot build a preconditioner from kind `none`".into(),
                ))
            }
            PreconditionerSpec::Midpoint => {
                let p = vec![0.0; d];
                let m = system.assemble_at(&p)?;
                (Some(p), Some(m))
            }
            PreconditionerSpec::Mean { order } => {
                if *order == 0 {
                    return Err(Error::InvalidArgument("mean order must be >= 1".into()));
                }
                let mean_rule = TensorQuadrature::tensor(&vec![*order; d])?;
                let n = system.dim_state();
                let mut mean = DMatrix::<f64>::zeros(n, n);
                for b in 0..mean_rule.len() {
                    let a = system.assemble_at(mean_rule.point(b))?.to_dense();
                    let weight = mean_rule.weight(b);
                    mean.zip_apply(&a, |x, y| *x += weight * y);
                }
                (None, Some(AssembledMatrix::Dense(mean)))
            }
            PreconditionerSpec::Random { seed } => {
                use rand::Rng;
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
                let p: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let m = system.assemble_at(&p)?;
                (Some(p), Some(m))
            }
            PreconditionerSpec::LargestEig => {
                let report = find_largest_eig_point(system, rule, search)?;
                let m = system.assemble_at(&report.point)?;
                let p = report.point.clone();
                search_report = Some(report);
                (Some(p), Some(m))
            }
            PreconditionerSpec::SmallestEig => {
                let report = find_smallest_eig_point(system, rule, search)?;
                let m = system.assemble_at(&report.point)?;
                let p = report.point.clone();
                search_report = Some(report);
                (Some(p), Some(m))
            }
            PreconditionerSpec::FixedPoint(p) => {
                if p.len() != d {
                    return Err(Error::DimensionMismatch {
                        context: "fixed preconditioner point",
                        expected: d,
                        got: p.len(),
                    });
                }
                let m = system.assemble_at(p)?;
                (Some(p.clone()), Some(m))
            }
            PreconditionerSpec::Diagonal(p) => {
                if p.len() != d {
                    return Err(Error::DimensionMismatch {
                        context: "diagonal preconditioner point",
                        expected: d,
                        got: p.len(),
                    });
                }
                let diag = system.assemble_at(p)?.diagonal();
                if diag.iter().any(|&v| v == 0.0 || !v.is_finite()) {
                    return Err(Error::SingularPreconditioner(
                        "zero or non-finite diagonal entry".into(),
                    ));
                }
                let fact = Factorization::Diagonal(DVector::from_vec(diag));
                return Ok(BlockPreconditioner {
                    spec: self.clone(),
                    factorization: fact,
                    point: Some(p.clone()),
                    search_report: None,
                    setup_seconds: start.elapsed().as_secs_f64(),
                });
            }
        };

        let matrix = matrix.expect("all non-diagonal kinds produce a matrix");
        let factorization = factorize(matrix, system.is_symmetric())?;
        Ok(BlockPreconditioner {
            spec: self.clone(),
            factorization,
            point,
            search_report,
            setup_seconds: start.elapsed().as_secs_f64(),
        })
    }
}

/// Picks the factorization from the declared symmetry and the matrix
/// structure: banded Cholesky for narrow sparse SPD matrices, dense Cholesky
/// for the rest of the symmetric ones, dense LU otherwise.
fn factorize(matrix: AssembledMatrix, symmetric: bool) -> Result<Factorization> {
    if symmetric {
        if let AssembledMatrix::Sparse(csr) = &matrix {
            let n = csr.n_rows();
            if csr.bandwidth().saturating_mul(4) <= n {
                return Ok(Factorization::Banded(BandedCholesky::new(csr)?));
            }
        }
        let dense = matrix.to_dense();
        match nalgebra::Cholesky::new(dense) {
            Some(chol) => Ok(Factorization::Cholesky(chol)),
            None => Err(Error::SingularPreconditioner(
                "Cholesky factorization failed (matrix not SPD)".into(),
            )),
        }
    } else {
        let dense = matrix.to_dense();
        let n = dense.nrows();
        let lu = nalgebra::LU::new(dense);
        if !lu.is_invertible() {
            return Err(Error::SingularPreconditioner(
                "LU factorization is singular".into(),
            ));
        }
        Ok(Factorization::Lu { lu, n })
    }
}
