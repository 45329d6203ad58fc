use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::problems::KlField;
use crate::system::{AssembledMatrix, ParameterizedSystem};

/// Five-point finite-difference discretization of the parameterized elliptic
/// problem `-div(a(x,s) grad u) = 1` on the unit square with homogeneous
/// Dirichlet boundary conditions.
///
/// The log-coefficient comes from a [`KlField`] over the full
/// `(m+2) x (m+2)` node grid (boundary nodes included). Face coefficients
/// are harmonic means of the two adjacent node values, which keeps the
/// matrix symmetric positive definite for any positive coefficient. The
/// stencil is left unscaled — entries are plain face coefficients — so the
/// right-hand side of the constant unit forcing is `h^2`.
#[derive(Debug, Clone)]
pub struct DiffusionProblem {
    m: usize, // interior nodes per side
    field: KlField,
}

impl DiffusionProblem {
    pub fn new(m: usize, field: KlField) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument(
                "diffusion grid needs at least one interior node".into(),
            ));
        }
        let nodes = m + 2;
        if field.grid().nx() != nodes || field.grid().ny() != nodes {
            return Err(Error::DimensionMismatch {
                context: "KL field grid vs diffusion node grid",
                expected: nodes,
                got: field.grid().nx(),
            });
        }
        Ok(Self { m, field })
    }

    /// Interior nodes per side.
    pub fn interior(&self) -> usize {
        self.m
    }

    pub fn field(&self) -> &KlField {
        &self.field
    }

    fn h(&self) -> f64 {
        1.0 / (self.m + 1) as f64
    }

    fn node(&self, i: usize, j: usize) -> usize {
        // i, j in 0..m+2 over the full node grid
        self.field.grid().node_index(i, j)
    }

    fn unknown(&self, i: usize, j: usize) -> usize {
        // i, j in 1..=m
        (j - 1) * self.m + (i - 1)
    }

    fn coefficient(&self, point: &[f64]) -> Result<Vec<f64>> {
        let mut a = vec![0.0; self.field.grid().n_nodes()];
        self.field
            .coefficient_at(point, &mut a)
            .map_err(|e| Error::SystemEval {
                point: point.to_vec(),
                message: e.to_string(),
            })?;
        debug_assert!(a.iter().all(|&v| v > 0.0));
        Ok(a)
    }

    /// Visits each stencil entry of row `(i,j)` as
    /// `(diagonal, west, east, south, north)` face coefficients.
    fn stencil(&self, a: &[f64], i: usize, j: usize) -> [f64; 5] {
        let harm = |u: f64, v: f64| 2.0 * u * v / (u + v);
        let c = a[self.node(i, j)];
        let west = harm(c, a[self.node(i - 1, j)]);
        let east = harm(c, a[self.node(i + 1, j)]);
        let south = harm(c, a[self.node(i, j - 1)]);
        let north = harm(c, a[self.node(i, j + 1)]);
        [west + east + south + north, west, east, south, north]
    }
}

impl ParameterizedSystem for DiffusionProblem {
    fn dim_parameters(&self) -> usize {
        self.field.dim()
    }

    fn dim_state(&self) -> usize {
        self.m * self.m
    }

    fn apply_at(&self, point: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        let a = self.coefficient(point)?;
        let m = self.m;
        assert_eq!(v.len(), m * m);
        assert_eq!(out.len(), m * m);
        for j in 1..=m {
            for i in 1..=m {
                let [diag, west, east, south, north] = self.stencil(&a, i, j);
                let r = self.unknown(i, j);
                let mut acc = diag * v[r];
                if i > 1 {
                    acc -= west * v[self.unknown(i - 1, j)];
                }
                if i < m {
                    acc -= east * v[self.unknown(i + 1, j)];
                }
                if j > 1 {
                    acc -= south * v[self.unknown(i, j - 1)];
                }
                if j < m {
                    acc -= north * v[self.unknown(i, j + 1)];
                }
                out[r] = acc;
            }
        }
        Ok(())
    }

    fn rhs_at(&self, point: &[f64], out: &mut [f64]) -> Result<()> {
        if point.len() != self.dim_parameters() {
            return Err(Error::DimensionMismatch {
                context: "diffusion rhs parameter point",
                expected: self.dim_parameters(),
                got: point.len(),
            });
        }
        let h2 = self.h() * self.h();
        out.fill(h2);
        Ok(())
    }

    fn is_symmetric(&self) -> bool {
        true
    }

    fn supports_assemble(&self) -> bool {
        true
    }

    fn assemble_at(&self, point: &[f64]) -> Result<AssembledMatrix> {
        let a = self.coefficient(point)?;
        let m = self.m;
        let n = m * m;
        let mut triplets = Vec::with_capacity(5 * n);
        for j in 1..=m {
            for i in 1..=m {
                let [diag, west, east, south, north] = self.stencil(&a, i, j);
                let r = self.unknown(i, j);
                triplets.push((r, r, diag));
                if i > 1 {
                    triplets.push((r, self.unknown(i - 1, j), -west));
                }
                if i < m {
                    triplets.push((r, self.unknown(i + 1, j), -east));
                }
                if j > 1 {
                    triplets.push((r, self.unknown(i, j - 1), -south));
                }
                if j < m {
                    triplets.push((r, self.unknown(i, j + 1), -north));
                }
            }
        }
        Ok(AssembledMatrix::Sparse(CsrMatrix::from_triplets(
            n, n, &triplets,
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Grid2d;
    use crate::system::check_contract;

    fn constant_field(m: usize) -> KlField {
        // A KL field with zero scale gives a == 1 everywhere.
        let grid = Grid2d::uniform(m + 2, m + 2);
        crate::problems::kl_decompose(grid, 2, 2.0, 2.0, 0.0).unwrap()
    }

    #[test]
    fn unit_coefficient_gives_laplacian_spectrum() {
        // Unscaled 5-point Laplacian eigenvalues: 4 sin^2(p pi h / 2) +
        // 4 sin^2(q pi h / 2) for p, q = 1..m.
        let m = 6;
        let problem = DiffusionProblem::new(m, constant_field(m)).unwrap();
        let dense = problem.assemble_at(&[0.1, -0.4]).unwrap().to_dense();
        let mut eigs: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigs.sort_by(|a, b| a.total_cmp(b));
        let h = 1.0 / (m as f64 + 1.0);
        let mut expected = Vec::new();
        for p in 1..=m {
            for q in 1..=m {
                let sp = (p as f64 * std::f64::consts::PI * h / 2.0).sin();
                let sq = (q as f64 * std::f64::consts::PI * h / 2.0).sin();
                expected.push(4.0 * sp * sp + 4.0 * sq * sq);
            }
        }
        expected.sort_by(|a, b| a.total_cmp(b));
        for (got, want) in eigs.iter().zip(&expected) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn matrix_symmetric_at_random_points() {
        use rand::Rng;
        use rand::SeedableRng;
        let m = 5;
        let grid = Grid2d::uniform(m + 2, m + 2);
        let field = KlField::standard(grid, 3).unwrap();
        let problem = DiffusionProblem::new(m, field).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let point: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..=1.0)).collect();
            match problem.assemble_at(&point).unwrap() {
                AssembledMatrix::Sparse(csr) => assert_eq!(csr.max_asymmetry(), 0.0),
                _ => panic!("expected sparse assembly"),
            }
        }
    }

    #[test]
    fn rhs_is_h_squared() {
        let m = 4;
        let problem = DiffusionProblem::new(m, constant_field(m)).unwrap();
        let mut rhs = vec![0.0; m * m];
        problem.rhs_at(&[0.0, 0.0], &mut rhs).unwrap();
        let h2 = (1.0f64 / 5.0).powi(2);
        assert!(rhs.iter().all(|&v| (v - h2).abs() < 1e-16));
    }

    #[test]
    fn satisfies_system_contract() {
        let m = 5;
        let grid = Grid2d::uniform(m + 2, m + 2);
        let field = KlField::standard(grid, 4).unwrap();
        let problem = DiffusionProblem::new(m, field).unwrap();
        let report = check_contract(&problem, 5, 5).unwrap();
        assert!(report.max_dev() <= 1e-12, "{report:?}");
    }

    #[test]
    fn rejects_mismatched_grid() {
        let grid = Grid2d::uniform(6, 6);
        let field = KlField::standard(grid, 2).unwrap();
        assert!(DiffusionProblem::new(5, field).is_err());
    }
}
