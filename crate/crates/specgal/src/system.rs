//! The interface supplied by a parameterized matrix equation
//! `A(s) x(s) = b(s)` on the hypercube `s in [-1,1]^d`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

/// An explicitly assembled `A(lambda)`, sparse or dense.
#[derive(Debug, Clone)]
pub enum AssembledMatrix {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

impl AssembledMatrix {
    pub fn n(&self) -> usize {
        match self {
            AssembledMatrix::Dense(m) => m.nrows(),
            AssembledMatrix::Sparse(m) => m.n_rows(),
        }
    }

    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        match self {
            AssembledMatrix::Dense(m) => {
                let v = nalgebra::DVectorView::from_slice(v, v.len());
                let mut out = nalgebra::DVectorViewMut::from_slice(out, m.nrows());
                out.gemv(1.0, m, &v, 0.0);
            }
            AssembledMatrix::Sparse(m) => m.matvec_into(v, out),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            AssembledMatrix::Dense(m) => m.clone(),
            AssembledMatrix::Sparse(m) => m.to_dense(),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        match self {
            AssembledMatrix::Dense(m) => m.diagonal().iter().copied().collect(),
            AssembledMatrix::Sparse(m) => m.diagonal(),
        }
    }

    /// Approximate memory footprint, used to decide whether operator-level
    /// caching of all quadrature-point matrices is affordable.
    pub fn memory_bytes(&self) -> usize {
        match self {
            AssembledMatrix::Dense(m) => m.len() * 8,
            AssembledMatrix::Sparse(m) => m.nnz() * 16,
        }
    }
}

/// A parameterized matrix equation, presented through the operations an
/// iterative solver needs: products `A(lambda) v`, right-hand sides
/// `b(lambda)`, and (optionally) explicit assembly of `A(lambda)`.
///
/// Implementations must be safe to call concurrently at distinct parameter
/// points; the Galerkin matvec may evaluate several quadrature points in
/// parallel. `A(lambda)` is assumed invertible everywhere on the hypercube.
pub trait ParameterizedSystem: Send + Sync {
    /// Number of parameters `d`.
    fn dim_parameters(&self) -> usize;

    /// State dimension `N`.
    fn dim_state(&self) -> usize;

    /// Writes `A(point) v` into `out`. Must be linear in `v` at fixed point.
    fn apply_at(&self, point: &[f64], v: &[f64], out: &mut [f64]) -> Result<()>;

    /// Writes `b(point)` into `out`.
    fn rhs_at(&self, point: &[f64], out: &mut [f64]) -> Result<()>;

    /// Whether `A(s) = A(s)^T` holds for all `s`.
    fn is_symmetric(&self) -> bool;

    /// Whether [`ParameterizedSystem::assemble_at`] is implemented.
    fn supports_assemble(&self) -> bool {
        false
    }

    /// Explicitly assembles `A(point)`. When supported, the result must agree
    /// with [`ParameterizedSystem::apply_at`] to roundoff.
    fn assemble_at(&self, _point: &[f64]) -> Result<AssembledMatrix> {
        Err(Error::AssembleUnsupported)
    }
}

/// Measured contract deviations of a [`ParameterizedSystem`] at a handful of
/// random parameter points; see [`check_contract`].
#[derive(Debug, Clone)]
pub struct ContractReport {
    /// Max deviation of `apply(a u + b v)` from `a apply(u) + b apply(v)`,
    /// relative to the result norm.
    pub linearity_dev: f64,
    /// Max relative deviation between `assemble(lambda) v` and
    /// `apply(lambda, v)` (zero when assembly is unsupported).
    pub apply_assemble_dev: f64,
    /// Max `|v^T A u - u^T A v| / (|u||v|)` when the system declares
    /// symmetry (zero otherwise).
    pub symmetry_dev: f64,
}

impl ContractReport {
    pub fn max_dev(&self) -> f64 {
        self.linearity_dev
            .max(self.apply_assemble_dev)
            .max(self.symmetry_dev)
    }
}

/// Spot-checks the [`ParameterizedSystem`] contract at `n_points` seeded
/// random parameter points.
pub fn check_contract(
    system: &dyn ParameterizedSystem,
    seed: u64,
    n_points: usize,
) -> Result<ContractReport> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = system.dim_state();
    let d = system.dim_parameters();

    let mut report = ContractReport {
        linearity_dev: 0.0,
        apply_assemble_dev: 0.0,
        symmetry_dev: 0.0,
    };
    let mut buf = vec![0.0; n];
    let mut buf2 = vec![0.0; n];
    let mut buf3 = vec![0.0; n];
    for _ in 0..n_points {
        let point: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let (a, b) = (rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0));

        // linearity
        let combo: Vec<f64> = u.iter().zip(&v).map(|(&x, &y)| a * x + b * y).collect();
        system.apply_at(&point, &combo, &mut buf)?;
        system.apply_at(&point, &u, &mut buf2)?;
        system.apply_at(&point, &v, &mut buf3)?;
        let mut norm = 0.0f64;
        let mut dev = 0.0f64;
        for i in 0..n {
            let expect = a * buf2[i] + b * buf3[i];
            dev = dev.max((buf[i] - expect).abs());
            norm = norm.max(expect.abs());
        }
        report.linearity_dev = report.linearity_dev.max(dev / norm.max(1.0));

        // apply vs assemble
        if system.supports_assemble() {
            let assembled = system.assemble_at(&point)?;
            assembled.matvec_into(&u, &mut buf);
            system.apply_at(&point, &u, &mut buf2)?;
            let mut dev = 0.0f64;
            let mut norm = 0.0f64;
            for i in 0..n {
                dev = dev.max((buf[i] - buf2[i]).abs());
                norm = norm.max(buf2[i].abs());
            }
            report.apply_assemble_dev = report.apply_assemble_dev.max(dev / norm.max(1.0));
        }

        // symmetry: v^T A u == u^T A v
        if system.is_symmetric() {
            system.apply_at(&point, &u, &mut buf)?;
            system.apply_at(&point, &v, &mut buf2)?;
            let vau: f64 = v.iter().zip(&buf).map(|(&x, &y)| x * y).sum();
            let uav: f64 = u.iter().zip(&buf2).map(|(&x, &y)| x * y).sum();
            let unorm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            report.symmetry_dev = report
                .symmetry_dev
                .max((vau - uav).abs() / (unorm * vnorm).max(1e-300));
        }
    }
    Ok(report)
}
