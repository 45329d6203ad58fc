use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::basis::TensorQuadrature;
use crate::error::{Error, Result};
use crate::linalg::BandedCholesky;
use crate::system::{AssembledMatrix, ParameterizedSystem};

/// Controls for the extreme-eigenvalue candidate searches.
#[derive(Debug, Clone)]
pub struct PointSearchOptions {
    /// Power / inverse iteration budget per candidate.
    pub max_iterations: usize,
    /// Relative tolerance on the eigenvalue estimate.
    pub tol: f64,
    /// Cap on the number of candidates evaluated; the union of quadrature
    /// points and hypercube corners is subsampled (seeded) past this.
    pub candidate_cap: usize,
    /// Seed for the subsample and the iteration start vector.
    pub seed: u64,
}

impl Default for PointSearchOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tol: 1e-6,
            candidate_cap: 2048,
            seed: 0,
        }
    }
}

/// Outcome of an extreme-eigenvalue point search.
#[derive(Debug, Clone)]
pub struct PointSelectionReport {
    /// The selected parameter point.
    pub point: Vec<f64>,
    /// Estimated extreme eigenvalue of `A` at that point.
    pub estimate: f64,
    /// Number of candidates evaluated.
    pub candidates: usize,
    /// Total eigenvalue iterations spent across candidates.
    pub iterations: usize,
    /// Candidates whose iteration did not reach the tolerance; their best
    /// estimates still compete.
    pub stagnated: usize,
    /// Candidates skipped because the factorization failed.
    pub skipped: usize,
}

/// Candidate set: all quadrature points plus the `2^d` corner sign patterns,
/// subsampled to `cap` with a seeded shuffle when larger.
fn candidate_points(rule: &TensorQuadrature, cap: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = rule.dim();
    let mut candidates: Vec<Vec<f64>> = (0..rule.len()).map(|i| rule.point(i).to_vec()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if d <= 16 {
        for bits in 0..(1usize << d) {
            let corner: Vec<f64> = (0..d)
                .map(|k| if bits >> k & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            candidates.push(corner);
        }
    } else {
        // Too many corners to enumerate; draw a seeded sample of patterns.
        for _ in 0..cap.min(4096) {
            let corner: Vec<f64> = (0..d)
                .map(|_| if rng.random_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 })
                .collect();
            candidates.push(corner);
        }
    }
    if candidates.len() > cap {
        // partial Fisher-Yates: the first `cap` entries become the sample
        for i in 0..cap {
            let j = rng.random_range(i..candidates.len());
            candidates.swap(i, j);
        }
        candidates.truncate(cap);
    }
    candidates
}

fn seeded_unit_vector(n: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
    let norm = v.norm();
    v /= norm;
    v
}

struct IterOutcome {
    estimate: f64,
    iterations: usize,
    converged: bool,
}

/// Power method for the dominant eigenvalue of `A(point)` using only
/// `apply_at`.
fn power_method(
    system: &dyn ParameterizedSystem,
    point: &[f64],
    start: &DVector<f64>,
    max_iterations: usize,
    tol: f64,
) -> Result<IterOutcome> {
    let n = system.dim_state();
    let mut v = start.clone();
    let mut av = DVector::<f64>::zeros(n);
    let mut estimate = 0.0f64;
    for k in 1..=max_iterations {
        system.apply_at(point, v.as_slice(), av.as_mut_slice())?;
        let new_estimate = v.dot(&av);
        let norm = av.norm();
        if norm == 0.0 {
            return Ok(IterOutcome {
                estimate: 0.0,
                iterations: k,
                converged: true,
            });
        }
        v.copy_from(&av);
        v /= norm;
        if (new_estimate - estimate).abs() <= tol * new_estimate.abs().max(1e-300) {
            return Ok(IterOutcome {
                estimate: new_estimate,
                iterations: k,
                converged: true,
            });
        }
        estimate = new_estimate;
    }
    Ok(IterOutcome {
        estimate,
        iterations: max_iterations,
        converged: false,
    })
}

enum SpdFactor {
    Banded(BandedCholesky),
    Dense(nalgebra::Cholesky<f64, nalgebra::Dyn>),
}

impl SpdFactor {
    fn new(matrix: &AssembledMatrix) -> Result<Self> {
        if let AssembledMatrix::Sparse(csr) = matrix {
            if csr.bandwidth().saturating_mul(4) <= csr.n_rows() {
                return Ok(SpdFactor::Banded(BandedCholesky::new(csr)?));
            }
        }
        nalgebra::Cholesky::new(matrix.to_dense())
            .map(SpdFactor::Dense)
            .ok_or_else(|| {
                Error::SingularPreconditioner("candidate matrix is not SPD".into())
            })
    }

    fn solve_in_place(&self, v: &mut DVector<f64>) {
        match self {
            SpdFactor::Banded(chol) => chol.solve_in_place(v.as_mut_slice()),
            SpdFactor::Dense(chol) => chol.solve_mut(v),
        }
    }
}

/// Inverse iteration for the smallest eigenvalue of an SPD `A(point)`,
/// using a factorization of the assembled matrix.
fn inverse_iteration(
    system: &dyn ParameterizedSystem,
    point: &[f64],
    start: &DVector<f64>,
    max_iterations: usize,
    tol: f64,
) -> Result<IterOutcome> {
    let matrix = system.assemble_at(point)?;
    let factor = SpdFactor::new(&matrix)?;
    let n = system.dim_state();
    let mut v = start.clone();
    let mut av = DVector::<f64>::zeros(n);
    let mut estimate = f64::INFINITY;
    for k in 1..=max_iterations {
        factor.solve_in_place(&mut v);
        let norm = v.norm();
        v /= norm;
        matrix.matvec_into(v.as_slice(), av.as_mut_slice());
        let new_estimate = v.dot(&av);
        if (new_estimate - estimate).abs() <= tol * new_estimate.abs().max(1e-300) {
            return Ok(IterOutcome {
                estimate: new_estimate,
                iterations: k,
                converged: true,
            });
        }
        estimate = new_estimate;
    }
    Ok(IterOutcome {
        estimate,
        iterations: max_iterations,
        converged: false,
    })
}

/// Searches the candidate set for the point maximizing the dominant
/// eigenvalue of `A(lambda)`, estimating it with up to
/// `options.max_iterations` power iterations per candidate.
///
/// The system must be declared symmetric. Candidates whose power iteration
/// stalls still contribute their best estimate and are counted in
/// `stagnated`.
pub fn find_largest_eig_point(
    system: &dyn ParameterizedSystem,
    rule: &TensorQuadrature,
    options: &PointSearchOptions,
) -> Result<PointSelectionReport> {
    if !system.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let candidates = candidate_points(rule, options.candidate_cap, options.seed);
    let start = seeded_unit_vector(system.dim_state(), options.seed ^ 0x9e3779b97f4a7c15);
    let outcomes: Vec<Result<IterOutcome>> = candidates
        .par_iter()
        .map(|point| power_method(system, point, &start, options.max_iterations, options.tol))
        .collect();

    let mut best: Option<(usize, f64)> = None;
    let mut iterations = 0;
    let mut stagnated = 0;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome?;
        iterations += outcome.iterations;
        if !outcome.converged {
            stagnated += 1;
        }
        if best.map_or(true, |(_, e)| outcome.estimate > e) {
            best = Some((i, outcome.estimate));
        }
    }
    let (winner, estimate) = best.expect("candidate set is never empty");
    Ok(PointSelectionReport {
        point: candidates[winner].clone(),
        estimate,
        candidates: candidates.len(),
        iterations,
        stagnated,
        skipped: 0,
    })
}

/// Searches the candidate set for the point minimizing the smallest
/// eigenvalue of an SPD `A(lambda)` via factorized inverse iteration.
///
/// Candidates whose factorization fails are skipped and counted in
/// `skipped`.
pub fn find_smallest_eig_point(
    system: &dyn ParameterizedSystem,
    rule: &TensorQuadrature,
    options: &PointSearchOptions,
) -> Result<PointSelectionReport> {
    if !system.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    if !system.supports_assemble() {
        return Err(Error::AssembleUnsupported);
    }
    let candidates = candidate_points(rule, options.candidate_cap, options.seed);
    let start = seeded_unit_vector(system.dim_state(), options.seed ^ 0x517cc1b727220a95);
    let outcomes: Vec<Result<Option<IterOutcome>>> = candidates
        .par_iter()
        .map(|point| {
            match inverse_iteration(system, point, &start, options.max_iterations, options.tol) {
                Ok(outcome) => Ok(Some(outcome)),
                Err(Error::SingularPreconditioner(_)) => Ok(None),
                Err(other) => Err(other),
            }
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    let mut iterations = 0;
    let mut stagnated = 0;
    let mut skipped = 0;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome? {
            None => skipped += 1,
            Some(outcome) => {
                iterations += outcome.iterations;
                if !outcome.converged {
                    stagnated += 1;
                }
                if best.map_or(true, |(_, e)| outcome.estimate < e) {
                    best = Some((i, outcome.estimate));
                }
            }
        }
    }
    let (winner, estimate) = best.ok_or_else(|| {
        Error::SingularPreconditioner("every candidate factorization failed".into())
    })?;
    Ok(PointSelectionReport {
        point: candidates[winner].clone(),
        estimate,
        candidates: candidates.len(),
        iterations,
        stagnated,
        skipped,
    })
}

/// Iterative estimates of the extreme eigenvalues of a symmetric
/// `A(point)`: power iteration for the largest, factorized inverse iteration
/// for the smallest when assembly is available, and a shifted power method
/// otherwise.
pub fn extreme_eigenvalues_iterative(
    system: &dyn ParameterizedSystem,
    point: &[f64],
    tol: f64,
) -> Result<(f64, f64)> {
    let n = system.dim_state();
    let start = seeded_unit_vector(n, 0x2545f4914f6cdd1d);
    let max_iterations = 2000;
    let largest = power_method(system, point, &start, max_iterations, tol)?.estimate;
    let smallest = if system.supports_assemble() {
        inverse_iteration(system, point, &start, max_iterations, tol)?.estimate
    } else {
        // theta_min(A) = shift - theta_max(shift I - A)
        let shift = 1.05 * largest.abs().max(1e-300);
        let shifted = ShiftedSystem {
            inner: system,
            shift,
        };
        let dominant = power_method(&shifted, point, &start, max_iterations, tol)?.estimate;
        shift - dominant
    };
    Ok((smallest, largest))
}

struct ShiftedSystem<'a> {
    inner: &'a dyn ParameterizedSystem,
    shift: f64,
}

impl ParameterizedSystem for ShiftedSystem<'_> {
    fn dim_parameters(&self) -> usize {
        self.inner.dim_parameters()
    }

    fn dim_state(&self) -> usize {
        self.inner.dim_state()
    }

    fn apply_at(&self, point: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        self.inner.apply_at(point, v, out)?;
        for (o, &x) in out.iter_mut().zip(v) {
            *o = self.shift * x - *o;
        }
        Ok(())
    }

    fn rhs_at(&self, point: &[f64], out: &mut [f64]) -> Result<()> {
        self.inner.rhs_at(point, out)
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}
