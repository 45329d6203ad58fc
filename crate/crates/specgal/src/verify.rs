//! Self-contained consistency checks that pit the matrix-free machinery
//! against dense oracles on a small instance.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::galerkin::{GalerkinOperator, DENSE_ASSEMBLY_CAP};
use crate::solvers::{solve, SolverConfig, SolverMethod};
use crate::system::check_contract;

/// One verification check with its measured discrepancy.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} (measured {:.3e}, threshold {:.3e}){}{}",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.measured,
            self.threshold,
            if self.detail.is_empty() { "" } else { " — " },
            self.detail
        )
    }
}

/// Report of all checks; failures are content, not errors.
#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, measured: f64, threshold: f64, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed: measured <= threshold,
            measured,
            threshold,
            detail,
        });
    }

    fn push_failure(&mut self, name: &str, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed: false,
            measured: f64::INFINITY,
            threshold: 0.0,
            detail,
        });
    }
}

/// Runs the oracle suite against an operator whose system supports dense
/// assembly and is small enough for it:
///
/// 1. system contract spot checks (linearity, apply/assemble, symmetry),
/// 2. the `Q Q^T = I` orthonormality deviation,
/// 3. the factorization identity — matvec columns vs the dense quadrature
///    summation,
/// 4. eigenvalue bounds containment (symmetric systems),
/// 5. an iterative solve against a dense direct solve.
pub fn run_verify(op: &GalerkinOperator) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    let system = op.system();

    let contract = check_contract(system.as_ref(), 0x5eed, 5)?;
    report.push(
        "system-contract",
        contract.max_dev(),
        1e-12,
        format!(
            "linearity {:.2e}, apply/assemble {:.2e}, symmetry {:.2e}",
            contract.linearity_dev, contract.apply_assemble_dev, contract.symmetry_dev
        ),
    );

    report.push(
        "q-orthonormality",
        op.basis_quad().orthonormality_deviation(),
        1e-10,
        format!(
            "{} basis polynomials, {} quadrature points",
            op.basis_quad().n_basis(),
            op.basis_quad().n_points()
        ),
    );

    let dense = match op.assemble_dense_galerkin(DENSE_ASSEMBLY_CAP) {
        Ok(dense) => dense,
        Err(err) => {
            report.push_failure("dense-assembly", err.to_string());
            return Ok(report);
        }
    };

    // factorization identity: operator matvec on unit vectors vs dense
    let size = op.dim();
    let mut dense_from_matvec = DMatrix::<f64>::zeros(size, size);
    let mut unit = vec![0.0; size];
    let mut col = vec![0.0; size];
    for j in 0..size {
        unit[j] = 1.0;
        op.matvec(&unit, &mut col)?;
        unit[j] = 0.0;
        for i in 0..size {
            dense_from_matvec[(i, j)] = col[i];
        }
    }
    let diff_norm = (&dense_from_matvec - &dense).norm();
    let rel = diff_norm / dense.norm().max(1e-300);
    report.push(
        "factorization-identity",
        rel,
        1e-12,
        format!("{size} unknowns, relative Frobenius deviation"),
    );

    if system.is_symmetric() {
        match op.eigenvalue_bounds() {
            Ok((lower, upper)) => {
                let eigs = dense.clone().symmetric_eigen().eigenvalues;
                let slack = 1e-10 * (1.0 + upper.abs());
                let mut overshoot = 0.0f64;
                for &e in eigs.iter() {
                    overshoot = overshoot.max(lower - e).max(e - upper);
                }
                report.push(
                    "eigenvalue-bounds",
                    overshoot.max(0.0),
                    slack,
                    format!("bounds [{lower:.6e}, {upper:.6e}]"),
                );
            }
            Err(err) => report.push_failure("eigenvalue-bounds", err.to_string()),
        }
    }

    let rhs = op.assemble_rhs()?;
    let direct = dense
        .clone()
        .lu()
        .solve(&DVector::from_column_slice(rhs.as_slice()))
        .ok_or_else(|| Error::EigensolveFailed("dense Galerkin matrix is singular".into()))?;
    let method = if system.is_symmetric() {
        SolverMethod::Minres
    } else {
        SolverMethod::BiCgStab
    };
    let config = SolverConfig::new(method).with_rtol(1e-10);
    match solve(op, rhs.as_slice(), &config, None) {
        Ok(solution) => {
            let got = solution.coefficients().as_slice();
            let scale = direct.amax().max(1e-300);
            let mut dev = 0.0f64;
            for (g, w) in got.iter().zip(direct.iter()) {
                dev = dev.max((g - w).abs());
            }
            report.push(
                "solver-vs-direct",
                dev / scale,
                1e-7,
                format!(
                    "{} in {} iterations, converged={}",
                    method.name(),
                    solution.iterations(),
                    solution.converged()
                ),
            );
        }
        Err(err) => report.push_failure("solver-vs-direct", err.to_string()),
    }

    Ok(report)
}

/// Convenience: verify a system by building a small operator for it.
pub fn verify_system(
    system: Arc<dyn crate::ParameterizedSystem>,
    basis_degree: usize,
    quadrature_order: usize,
) -> Result<VerifyReport> {
    use crate::basis::{MultiIndexSet, TensorQuadrature};
    use crate::galerkin::BasisQuadMatrix;
    let d = system.dim_parameters();
    let basis = MultiIndexSet::total_degree(d, basis_degree)?;
    let rule = TensorQuadrature::tensor(&vec![quadrature_order; d])?;
    let bq = BasisQuadMatrix::build_default(basis, rule)?;
    let op = GalerkinOperator::new(bq, system)?;
    run_verify(&op)
}
