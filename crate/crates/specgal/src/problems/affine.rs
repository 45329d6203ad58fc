use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::system::{AssembledMatrix, ParameterizedSystem};

/// `A(s) = A_0 + sum_k A_k s_k`, `b(s) = b_0 + sum_k b_k s_k` with seeded
/// sparse random coefficient matrices. The SPD variant symmetrizes every
/// `A_k` and makes `A_0` dominant enough that `A(s)` stays positive definite
/// on the whole hypercube.
#[derive(Debug, Clone)]
pub struct AffineSystem {
    a0: DMatrix<f64>,
    aks: Vec<DMatrix<f64>>,
    b0: DVector<f64>,
    bks: Vec<DVector<f64>>,
    symmetric: bool,
}

impl AffineSystem {
    /// Seeded general (nonsymmetric) affine system, invertible on the
    /// hypercube by diagonal dominance of `A_0`.
    pub fn random(n: usize, d: usize, seed: u64) -> Self {
        Self::random_impl(n, d, seed, false)
    }

    /// Seeded symmetric positive definite affine system.
    pub fn random_spd(n: usize, d: usize, seed: u64) -> Self {
        Self::random_impl(n, d, seed, true)
    }

    fn random_impl(n: usize, d: usize, seed: u64, spd: bool) -> Self {
        assert!(n >= 1 && d >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut aks = Vec::with_capacity(d);
        for _ in 0..d {
            let mut ak = sparse_random(n, &mut rng);
            if spd {
                ak = (&ak + ak.transpose()) * 0.5;
            }
            aks.push(ak);
        }
        // Entrywise l1 mass bounds the spectral norm, so this shift keeps
        // A(s) = A_0 + sum A_k s_k definite for |s_k| <= 1.
        let shift: f64 = 1.0
            + aks
                .iter()
                .map(|ak| ak.iter().map(|v| v.abs()).sum::<f64>())
                .sum::<f64>();
        let mut a0 = DMatrix::<f64>::identity(n, n) * shift;
        let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0));
        if spd {
            a0 += &r * r.transpose() * (1.0 / n as f64);
        } else {
            a0 += r * 0.5;
        }
        let b0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
        let bks = (0..d)
            .map(|_| DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0)))
            .collect();
        Self {
            a0,
            aks,
            b0,
            bks,
            symmetric: spd,
        }
    }

    /// The canonical scalar fixture `A(s) = 2 + s`, `b(s) = 1`.
    pub fn scalar_canonical() -> Self {
        Self {
            a0: DMatrix::from_element(1, 1, 2.0),
            aks: vec![DMatrix::from_element(1, 1, 1.0)],
            b0: DVector::from_element(1, 1.0),
            bks: vec![DVector::zeros(1)],
            symmetric: true,
        }
    }

    /// Explicit construction from coefficient matrices.
    pub fn from_parts(
        a0: DMatrix<f64>,
        aks: Vec<DMatrix<f64>>,
        b0: DVector<f64>,
        bks: Vec<DVector<f64>>,
        symmetric: bool,
    ) -> Self {
        let n = a0.nrows();
        assert!(aks.iter().all(|m| m.nrows() == n && m.ncols() == n));
        assert_eq!(b0.len(), n);
        assert_eq!(bks.len(), aks.len());
        Self {
            a0,
            aks,
            b0,
            bks,
            symmetric,
        }
    }

    pub fn a0(&self) -> &DMatrix<f64> {
        &self.a0
    }

    fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.aks.len() {
            return Err(Error::DimensionMismatch {
                context: "affine system parameter point",
                expected: self.aks.len(),
                got: point.len(),
            });
        }
        Ok(())
    }
}

fn sparse_random(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    // roughly half the entries populated
    DMatrix::from_fn(n, n, |_, _| {
        if rng.random_range(0.0..1.0) < 0.5 {
            rng.random_range(-1.0..=1.0)
        } else {
            0.0
        }
    })
}

impl ParameterizedSystem for AffineSystem {
    fn dim_parameters(&self) -> usize {
        self.aks.len()
    }

    fn dim_state(&self) -> usize {
        self.a0.nrows()
    }

    fn apply_at(&self, point: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_point(point)?;
        let v = nalgebra::DVectorView::from_slice(v, v.len());
        let mut out = nalgebra::DVectorViewMut::from_slice(out, self.dim_state());
        out.gemv(1.0, &self.a0, &v, 0.0);
        for (ak, &s) in self.aks.iter().zip(point) {
            if s != 0.0 {
                out.gemv(s, ak, &v, 1.0);
            }
        }
        Ok(())
    }

    fn rhs_at(&self, point: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_point(point)?;
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = self.b0[i];
            for (bk, &s) in self.bks.iter().zip(point) {
                acc += s * bk[i];
            }
            *o = acc;
        }
        Ok(())
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn supports_assemble(&self) -> bool {
        true
    }

    fn assemble_at(&self, point: &[f64]) -> Result<AssembledMatrix> {
        self.check_point(point)?;
        let mut a = self.a0.clone();
        for (ak, &s) in self.aks.iter().zip(point) {
            a.zip_apply(ak, |x, y| *x += s * y);
        }
        Ok(AssembledMatrix::Dense(a))
    }
}

/// `A(s) = I` with an affine right-hand side `b(s) = b_0 + sum_k b_k s_k`.
///
/// The Galerkin solution of this system is exactly the vector of Fourier
/// coefficients of `b`, which makes it the standard smoke fixture.
#[derive(Debug, Clone)]
pub struct IdentitySystem {
    n: usize,
    d: usize,
    b0: DVector<f64>,
    bks: Vec<DVector<f64>>,
}

impl IdentitySystem {
    pub fn new(n: usize, d: usize, b0: Vec<f64>, bks: Vec<Vec<f64>>) -> Self {
        assert_eq!(b0.len(), n);
        assert!(bks.len() <= d);
        let mut full_bks: Vec<DVector<f64>> = bks
            .into_iter()
            .map(|b| {
                assert_eq!(b.len(), n);
                DVector::from_vec(b)
            })
            .collect();
        full_bks.resize(d, DVector::zeros(n));
        Self {
            n,
            d,
            b0: DVector::from_vec(b0),
            bks: full_bks,
        }
    }

    /// `b(s) = (1, ..., 1)`.
    pub fn with_constant_rhs(n: usize, d: usize) -> Self {
        Self::new(n, d, vec![1.0; n], vec![])
    }
}

impl ParameterizedSystem for IdentitySystem {
    fn dim_parameters(&self) -> usize {
        self.d
    }

    fn dim_state(&self) -> usize {
        self.n
    }

    fn apply_at(&self, point: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        if point.len() != self.d {
            return Err(Error::DimensionMismatch {
                context: "identity system parameter point",
                expected: self.d,
                got: point.len(),
            });
        }
        out.copy_from_slice(v);
        Ok(())
    }

    fn rhs_at(&self, point: &[f64], out: &mut [f64]) -> Result<()> {
        if point.len() != self.d {
            return Err(Error::DimensionMismatch {
                context: "identity system parameter point",
                expected: self.d,
                got: point.len(),
            });
        }
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = self.b0[i];
            for (bk, &s) in self.bks.iter().zip(point) {
                acc += s * bk[i];
            }
            *o = acc;
        }
        Ok(())
    }

    fn is_symmetric(&self) -> bool {
        true
    }

    fn supports_assemble(&self) -> bool {
        true
    }

    fn assemble_at(&self, _point: &[f64]) -> Result<AssembledMatrix> {
        Ok(AssembledMatrix::Dense(DMatrix::identity(self.n, self.n)))
    }
}
