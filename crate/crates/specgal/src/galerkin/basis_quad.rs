use nalgebra::DMatrix;

use crate::basis::{EvalScratch, MultiIndexSet, TensorQuadrature};
use crate::error::{Error, Result};

/// The `|I| x |J|` matrix `Q` with entries `sqrt(nu_b) pi_a(lambda_b)`.
///
/// When the quadrature integrates all pairwise basis products exactly, the
/// rows of `Q` are orthonormal (`Q Q^T = I`); the constructor verifies this
/// and rejects under-resolved rules. Note the check guards the basis
/// orthonormality only — it cannot detect under-integration of `A(s)` itself
/// for non-polynomial parameter dependence, where the quadrature order
/// remains the caller's responsibility.
#[derive(Debug, Clone)]
pub struct BasisQuadMatrix {
    basis: MultiIndexSet,
    quadrature: TensorQuadrature,
    matrix: DMatrix<f64>,
    orthodev: f64,
}

impl BasisQuadMatrix {
    pub const DEFAULT_ORTHOTOL: f64 = 1e-10;

    /// Builds `Q` and verifies `max |Q Q^T - I| <= orthotol`.
    pub fn build(
        basis: MultiIndexSet,
        quadrature: TensorQuadrature,
        orthotol: f64,
    ) -> Result<Self> {
        if basis.dim() != quadrature.dim() {
            return Err(Error::DimensionMismatch {
                context: "basis vs quadrature dimension",
                expected: basis.dim(),
                got: quadrature.dim(),
            });
        }
        let n_basis = basis.len();
        let n_points = quadrature.len();
        if n_basis > n_points {
            return Err(Error::RankDeficient {
                basis: n_basis,
                points: n_points,
            });
        }
        let mut matrix = DMatrix::<f64>::zeros(n_basis, n_points);
        let mut scratch = EvalScratch::new(&basis);
        let mut column = vec![0.0; n_basis];
        for b in 0..n_points {
            basis.evaluate_into(quadrature.point(b), &mut scratch, &mut column)?;
            let sqrt_weight = quadrature.weight(b).sqrt();
            for (a, &value) in column.iter().enumerate() {
                matrix[(a, b)] = sqrt_weight * value;
            }
        }

        let mut gram = DMatrix::<f64>::zeros(n_basis, n_basis);
        gram.gemm(1.0, &matrix, &matrix.transpose(), 0.0);
        let mut orthodev = 0.0f64;
        for i in 0..n_basis {
            for j in 0..n_basis {
                let target = if i == j { 1.0 } else { 0.0 };
                orthodev = orthodev.max((gram[(i, j)] - target).abs());
            }
        }
        if orthodev > orthotol {
            return Err(Error::QuadratureTooCoarse {
                max_dev: orthodev,
                tol: orthotol,
            });
        }
        Ok(Self {
            basis,
            quadrature,
            matrix,
            orthodev,
        })
    }

    /// Builds with the default orthonormality tolerance of `1e-10`.
    pub fn build_default(basis: MultiIndexSet, quadrature: TensorQuadrature) -> Result<Self> {
        Self::build(basis, quadrature, Self::DEFAULT_ORTHOTOL)
    }

    pub fn basis(&self) -> &MultiIndexSet {
        &self.basis
    }

    pub fn quadrature(&self) -> &TensorQuadrature {
        &self.quadrature
    }

    /// Number of basis polynomials `|I|` (rows).
    pub fn n_basis(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of quadrature points `|J|` (columns).
    pub fn n_points(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The measured `max |Q Q^T - I|` from construction.
    pub fn orthonormality_deviation(&self) -> f64 {
        self.orthodev
    }
}
