use std::sync::Arc;

use nalgebra::{DMatrix, DMatrixView, DVector};
use rayon::prelude::*;

use crate::basis::EvalScratch;
use crate::error::{Error, Result};
use crate::galerkin::BasisQuadMatrix;
use crate::system::{AssembledMatrix, ParameterizedSystem};

/// Default cap (in unknowns `N |I|`) for the dense assembly oracle.
pub const DENSE_ASSEMBLY_CAP: usize = 5000;

/// Memory budget for caching assembled quadrature-point matrices.
const AUTO_CACHE_BUDGET_BYTES: usize = 512 * 1024 * 1024;

/// Whether the operator pre-assembles `A(lambda_b)` at every quadrature
/// point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CacheMode {
    /// Cache when the system supports assembly and the estimated footprint
    /// stays within a fixed budget.
    #[default]
    Auto,
    Always,
    Never,
}

/// The Galerkin matrix `<pi pi^T x A>` of size `N|I| x N|I|`, represented
/// through its factorization `(Q x I) A(lambda) (Q x I)^T` and applied
/// matrix-free.
///
/// Vectors of length `N |I|` are interpreted as column-stacked `N x |I|`
/// coefficient matrices. Quadrature-point evaluations in the middle step may
/// run in parallel; results are deterministic for a fixed build because the
/// final contraction accumulates in a fixed quadrature order.
pub struct GalerkinOperator {
    bq: BasisQuadMatrix,
    system: Arc<dyn ParameterizedSystem>,
    cached: Option<Vec<AssembledMatrix>>,
}

impl GalerkinOperator {
    /// Creates the operator with [`CacheMode::Auto`].
    pub fn new(bq: BasisQuadMatrix, system: Arc<dyn ParameterizedSystem>) -> Result<Self> {
        Self::with_cache_mode(bq, system, CacheMode::Auto)
    }

    pub fn with_cache_mode(
        bq: BasisQuadMatrix,
        system: Arc<dyn ParameterizedSystem>,
        cache: CacheMode,
    ) -> Result<Self> {
        if system.dim_parameters() != bq.basis().dim() {
            return Err(Error::DimensionMismatch {
                context: "system parameter dimension vs basis",
                expected: bq.basis().dim(),
                got: system.dim_parameters(),
            });
        }
        let mut op = Self {
            bq,
            system,
            cached: None,
        };
        let should_cache = match cache {
            CacheMode::Never => false,
            CacheMode::Always => {
                if !op.system.supports_assemble() {
                    return Err(Error::AssembleUnsupported);
                }
                true
            }
            CacheMode::Auto => op.system.supports_assemble() && op.auto_cache_fits()?,
        };
        if should_cache {
            let quad = op.bq.quadrature();
            let mats = (0..quad.len())
                .map(|b| op.system.assemble_at(quad.point(b)))
                .collect::<Result<Vec<_>>>()?;
            op.cached = Some(mats);
        }
        Ok(op)
    }

    fn auto_cache_fits(&self) -> Result<bool> {
        let quad = self.bq.quadrature();
        let sample = self.system.assemble_at(quad.point(0))?;
        Ok(sample.memory_bytes().saturating_mul(quad.len()) <= AUTO_CACHE_BUDGET_BYTES)
    }

    pub fn basis_quad(&self) -> &BasisQuadMatrix {
        &self.bq
    }

    pub fn basis(&self) -> &crate::basis::MultiIndexSet {
        self.bq.basis()
    }

    pub fn quadrature(&self) -> &crate::basis::TensorQuadrature {
        self.bq.quadrature()
    }

    pub fn system(&self) -> &Arc<dyn ParameterizedSystem> {
        &self.system
    }

    /// State dimension `N`.
    pub fn dim_state(&self) -> usize {
        self.system.dim_state()
    }

    /// Total unknowns `N |I|`.
    pub fn dim(&self) -> usize {
        self.dim_state() * self.bq.n_basis()
    }

    fn apply_point(&self, b: usize, v: &[f64], out: &mut [f64]) -> Result<()> {
        if let Some(cache) = &self.cached {
            cache[b].matvec_into(v, out);
            Ok(())
        } else {
            let point = self.quadrature().point(b);
            self.system
                .apply_at(point, v, out)
                .map_err(|e| attach_point(e, point))
        }
    }

    /// Applies the Galerkin matrix: `out = (Q x I) A(lambda) (Q x I)^T u`.
    ///
    /// Step 1 forms `W = U Q`, step 2 applies `A(lambda_b)` to each column,
    /// step 3 contracts `V = Y Q^T`.
    pub fn matvec(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.dim_state();
        let n_basis = self.bq.n_basis();
        let n_points = self.bq.n_points();
        if u.len() != n * n_basis {
            return Err(Error::DimensionMismatch {
                context: "galerkin matvec input",
                expected: n * n_basis,
                got: u.len(),
            });
        }
        assert_eq!(out.len(), u.len());

        let u_mat = DMatrixView::from_slice(u, n, n_basis);
        let q = self.bq.matrix();

        // Step 1: W = U Q.
        let mut w = DMatrix::<f64>::zeros(n, n_points);
        w.gemm(1.0, &u_mat, q, 0.0);

        // Step 2: y_b = A(lambda_b) w_b, independently per point.
        let mut y = DMatrix::<f64>::zeros(n, n_points);
        let results: Result<Vec<()>> = y
            .as_mut_slice()
            .par_chunks_mut(n)
            .zip(w.as_slice().par_chunks(n))
            .enumerate()
            .map(|(b, (y_col, w_col))| self.apply_point(b, w_col, y_col))
            .collect();
        results?;

        // Step 3: V = Y Q^T, a single fixed-order contraction.
        let mut v = nalgebra::DMatrixViewMut::from_slice(out, n, n_basis);
        v.gemm(1.0, &y, &q.transpose(), 0.0);
        Ok(())
    }

    /// Convenience wrapper allocating the output.
    pub fn matvec_owned(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; u.len()];
        self.matvec(u, &mut out)?;
        Ok(out)
    }

    /// Assembles the Galerkin right-hand side `<pi x b>`: block `a` equals
    /// `sum_b pi_a(lambda_b) b(lambda_b) nu_b`.
    ///
    /// The summation runs in ascending quadrature order with the scale
    /// `nu_b * pi_a(lambda_b)` applied per block, so the result is bitwise
    /// reproducible and streams `b(lambda_b)` without materializing all
    /// right-hand sides at once.
    pub fn assemble_rhs(&self) -> Result<DVector<f64>> {
        let n = self.dim_state();
        let n_basis = self.bq.n_basis();
        let quad = self.quadrature();
        let basis = self.bq.basis();
        let mut scratch = EvalScratch::new(basis);
        let mut pi = vec![0.0; n_basis];
        let mut b_vec = vec![0.0; n];
        let mut rhs = DVector::<f64>::zeros(n * n_basis);
        for b in 0..quad.len() {
            let point = quad.point(b);
            self.system
                .rhs_at(point, &mut b_vec)
                .map_err(|e| attach_point(e, point))?;
            basis.evaluate_into(point, &mut scratch, &mut pi)?;
            let nu = quad.weight(b);
            for (a, &pi_a) in pi.iter().enumerate() {
                let scale = nu * pi_a;
                let block = &mut rhs.as_mut_slice()[a * n..(a + 1) * n];
                for (dst, &src) in block.iter_mut().zip(&b_vec) {
                    *dst += scale * src;
                }
            }
        }
        Ok(rhs)
    }

    /// Dense assembly of the Galerkin matrix by direct quadrature summation
    /// `sum_b [pi(lambda_b) pi(lambda_b)^T x A(lambda_b)] nu_b`.
    ///
    /// This is the testing oracle for the factorized matvec: it follows the
    /// summation form rather than the `Q`-factorized product. Requires
    /// explicit assembly and `N |I|` at most `cap`.
    pub fn assemble_dense_galerkin(&self, cap: usize) -> Result<DMatrix<f64>> {
        let n = self.dim_state();
        let n_basis = self.bq.n_basis();
        let size = n * n_basis;
        if size > cap {
            return Err(Error::CapExceeded { size, cap });
        }
        if !self.system.supports_assemble() {
            return Err(Error::AssembleUnsupported);
        }
        let quad = self.quadrature();
        let basis = self.bq.basis();
        let mut scratch = EvalScratch::new(basis);
        let mut pi = vec![0.0; n_basis];
        let mut dense = DMatrix::<f64>::zeros(size, size);
        for b in 0..quad.len() {
            let point = quad.point(b);
            let a_mat = self
                .system
                .assemble_at(point)
                .map_err(|e| attach_point(e, point))?
                .to_dense();
            basis.evaluate_into(point, &mut scratch, &mut pi)?;
            let nu = quad.weight(b);
            for (i, &pi_i) in pi.iter().enumerate() {
                for (j, &pi_j) in pi.iter().enumerate() {
                    let scale = nu * pi_i * pi_j;
                    if scale == 0.0 {
                        continue;
                    }
                    let mut block = dense.view_mut((i * n, j * n), (n, n));
                    block.zip_apply(&a_mat, |x, y| *x += scale * y);
                }
            }
        }
        Ok(dense)
    }

    /// Eigenvalue bounds for the Galerkin matrix of a symmetric system:
    /// `(min_b theta_min(A(lambda_b)), max_b theta_max(A(lambda_b)))`.
    ///
    /// Every eigenvalue of the Galerkin matrix lies in this interval. Small
    /// assembled systems use a dense symmetric eigensolve per point; larger
    /// or matrix-free systems fall back to power/inverse iteration with
    /// tolerance `1e-8`.
    pub fn eigenvalue_bounds(&self) -> Result<(f64, f64)> {
        if !self.system.is_symmetric() {
            return Err(Error::NotSymmetric);
        }
        let n = self.dim_state();
        let quad = self.quadrature();
        let dense_limit = 260;
        let mut lower = f64::INFINITY;
        let mut upper = f64::NEG_INFINITY;
        for b in 0..quad.len() {
            let point = quad.point(b);
            let (lo, hi) = if self.system.supports_assemble() && n <= dense_limit {
                let dense = self.system.assemble_at(point)?.to_dense();
                dense_sym_extremes(&dense)?
            } else {
                crate::solvers::extreme_eigenvalues_iterative(
                    self.system.as_ref(),
                    point,
                    1e-8,
                )?
            };
            lower = lower.min(lo);
            upper = upper.max(hi);
        }
        Ok((lower, upper))
    }
}

fn attach_point(err: Error, point: &[f64]) -> Error {
    match err {
        Error::SystemEval { message, .. } => Error::SystemEval {
            point: point.to_vec(),
            message,
        },
        other => Error::SystemEval {
            point: point.to_vec(),
            message: other.to_string(),
        },
    }
}

pub(crate) fn dense_sym_extremes(matrix: &DMatrix<f64>) -> Result<(f64, f64)> {
    let eigen = matrix.clone().symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in eigen.eigenvalues.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::EigensolveFailed("non-finite eigenvalue".into()));
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{MultiIndexSet, TensorQuadrature};
    use crate::problems::{AffineSystem, IdentitySystem};

    fn small_operator(system: Arc<dyn ParameterizedSystem>, n_basis: usize, order: usize) -> GalerkinOperator {
        let d = system.dim_parameters();
        let basis = MultiIndexSet::total_degree(d, n_basis).unwrap();
        let rule = TensorQuadrature::tensor(&vec![order; d]).unwrap();
        let bq = BasisQuadMatrix::build(basis, rule, 1e-10).unwrap();
        GalerkinOperator::new(bq, system).unwrap()
    }

    #[test]
    fn identity_system_matvec_is_identity() {
        let system = Arc::new(IdentitySystem::with_constant_rhs(4, 2));
        let op = small_operator(system, 2, 3);
        let u: Vec<f64> = (0..op.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let v = op.matvec_owned(&u).unwrap();
        for (a, b) in u.iter().zip(&v) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn matvec_rejects_wrong_length() {
        let system = Arc::new(IdentitySystem::with_constant_rhs(4, 2));
        let op = small_operator(system, 2, 3);
        assert!(op.matvec_owned(&vec![0.0; op.dim() + 1]).is_err());
    }

    #[test]
    fn matvec_matches_dense_oracle() {
        use rand::Rng;
        use rand::SeedableRng;
        let system = Arc::new(AffineSystem::random(2, 1, 99));
        let op = small_operator(system, 2, 4);
        let dense = op.assemble_dense_galerkin(DENSE_ASSEMBLY_CAP).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let u: Vec<f64> = (0..op.dim()).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let got = op.matvec_owned(&u).unwrap();
            let expected = &dense * DVector::from_column_slice(&u);
            let scale = expected.amax().max(1e-300);
            for i in 0..op.dim() {
                assert!(
                    (got[i] - expected[i]).abs() <= 1e-12 * scale,
                    "entry {i}: {} vs {}",
                    got[i],
                    expected[i]
                );
            }
        }
    }

    #[test]
    fn dense_assembly_of_identity_is_identity() {
        let system = Arc::new(IdentitySystem::with_constant_rhs(3, 2));
        let op = small_operator(system, 1, 2);
        let dense = op.assemble_dense_galerkin(DENSE_ASSEMBLY_CAP).unwrap();
        let size = op.dim();
        for i in 0..size {
            for j in 0..size {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dense[(i, j)] - expected).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn dense_assembly_symmetric_for_symmetric_systems() {
        let system = Arc::new(AffineSystem::random_spd(4, 2, 3));
        let op = small_operator(system, 2, 3);
        let dense = op.assemble_dense_galerkin(DENSE_ASSEMBLY_CAP).unwrap();
        let dev = (&dense - dense.transpose()).amax();
        assert!(dev <= 1e-13, "asymmetry {dev}");
    }

    #[test]
    fn dense_assembly_cap() {
        let system = Arc::new(IdentitySystem::with_constant_rhs(10, 1));
        let op = small_operator(system, 3, 4);
        match op.assemble_dense_galerkin(10) {
            Err(Error::CapExceeded { size: 40, cap: 10 }) => {}
            other => panic!("expected CapExceeded, got {other:?}"),
        }
    }

    #[test]
    fn rhs_of_constant_b_is_first_block() {
        let n = 5;
        let b0: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let system = Arc::new(IdentitySystem::new(n, 2, b0.clone(), vec![]));
        let op = small_operator(system, 2, 3);
        let rhs = op.assemble_rhs().unwrap();
        for i in 0..n {
            assert!((rhs[i] - b0[i]).abs() < 1e-13);
        }
        for i in n..op.dim() {
            assert!(rhs[i].abs() < 1e-13, "block entry {i} = {}", rhs[i]);
        }
    }

    #[test]
    fn rhs_of_linear_b_projects_onto_degree_one() {
        // d=1, b(s) = c*s: the alpha=(1) block is c/sqrt(3).
        let c = 2.5;
        let system = Arc::new(IdentitySystem::new(1, 1, vec![0.0], vec![vec![c]]));
        let basis = MultiIndexSet::total_degree(1, 1).unwrap();
        let rule = TensorQuadrature::tensor(&[3]).unwrap();
        let bq = BasisQuadMatrix::build(basis, rule, 1e-10).unwrap();
        let op = GalerkinOperator::new(bq, system).unwrap();
        let rhs = op.assemble_rhs().unwrap();
        assert!((rhs[0] - 0.0).abs() < 1e-14);
        assert!((rhs[1] - c / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn eigenvalue_bounds_identity() {
        let system = Arc::new(IdentitySystem::with_constant_rhs(4, 2));
        let op = small_operator(system, 2, 3);
        let (lo, hi) = op.eigenvalue_bounds().unwrap();
        assert!((lo - 1.0).abs() < 1e-12);
        assert!((hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalue_bounds_scalar_affine() {
        // A(s) = 2 + s with 3 Gauss points: extremes at +-sqrt(3/5).
        let system = Arc::new(AffineSystem::scalar_canonical());
        let basis = MultiIndexSet::total_degree(1, 1).unwrap();
        let rule = TensorQuadrature::tensor(&[3]).unwrap();
        let bq = BasisQuadMatrix::build(basis, rule, 1e-10).unwrap();
        let op = GalerkinOperator::new(bq, system).unwrap();
        let (lo, hi) = op.eigenvalue_bounds().unwrap();
        let x = (3f64 / 5.0).sqrt();
        assert!((lo - (2.0 - x)).abs() < 1e-12);
        assert!((hi - (2.0 + x)).abs() < 1e-12);
    }

    #[test]
    fn eigenvalue_bounds_require_symmetry() {
        let system = Arc::new(AffineSystem::random(3, 2, 1));
        let op = small_operator(system, 1, 2);
        assert!(matches!(op.eigenvalue_bounds(), Err(Error::NotSymmetric)));
    }
}
