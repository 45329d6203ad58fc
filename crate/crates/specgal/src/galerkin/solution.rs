use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::basis::{EvalScratch, MultiIndexSet};
use crate::error::{Error, Result};

/// How a Krylov solve ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    /// Iteration budget exhausted; coefficients hold the best iterate.
    MaxIterExceeded,
    /// The recurrence broke down (e.g. BiCGStab rho ~ 0); coefficients hold
    /// the last iterate.
    Breakdown(String),
}

/// Galerkin coefficients `X` (state dimension x basis size) plus solve
/// metadata.
///
/// Column `a` of `X` is the coefficient vector of the basis polynomial
/// `pi_a`; the surrogate is `x(s) = X pi(s)`.
#[derive(Debug, Clone)]
pub struct GalerkinSolution {
    coefficients: DMatrix<f64>,
    basis: MultiIndexSet,
    residual_history: Vec<f64>,
    iterations: usize,
    status: SolveStatus,
}

impl GalerkinSolution {
    pub fn new(
        coefficients: DMatrix<f64>,
        basis: MultiIndexSet,
        residual_history: Vec<f64>,
        iterations: usize,
        status: SolveStatus,
    ) -> Self {
        assert_eq!(coefficients.ncols(), basis.len());
        Self {
            coefficients,
            basis,
            residual_history,
            iterations,
            status,
        }
    }

    /// Wraps a stacked coefficient vector (columns of `X` concatenated).
    pub fn from_stacked(
        stacked: &[f64],
        n_state: usize,
        basis: MultiIndexSet,
        residual_history: Vec<f64>,
        iterations: usize,
        status: SolveStatus,
    ) -> Self {
        assert_eq!(stacked.len(), n_state * basis.len());
        let coefficients = DMatrix::from_column_slice(n_state, basis.len(), stacked);
        Self::new(coefficients, basis, residual_history, iterations, status)
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn basis(&self) -> &MultiIndexSet {
        &self.basis
    }

    pub fn n_state(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn status(&self) -> &SolveStatus {
        &self.status
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// Recorded preconditioned-residual 2-norms, entry 0 being the initial
    /// residual.
    pub fn residual_history(&self) -> &[f64] {
        &self.residual_history
    }

    /// Evaluates the surrogate `X pi(s)` at a parameter point.
    pub fn evaluate(&self, point: &[f64]) -> Result<DVector<f64>> {
        if point.len() != self.basis.dim() {
            return Err(Error::DimensionMismatch {
                context: "surrogate evaluation point",
                expected: self.basis.dim(),
                got: point.len(),
            });
        }
        let mut scratch = EvalScratch::new(&self.basis);
        let mut pi = vec![0.0; self.basis.len()];
        self.basis.evaluate_into(point, &mut scratch, &mut pi)?;
        Ok(&self.coefficients * DVector::from_column_slice(&pi))
    }

    /// Mean and variance of the surrogate under the uniform measure.
    ///
    /// With an orthonormal basis whose first member is the constant, the
    /// mean is the first coefficient column and the variance sums the squares
    /// of the remaining columns.
    pub fn moments(&self) -> (DVector<f64>, DVector<f64>) {
        let n = self.n_state();
        let mean = self.coefficients.column(0).into_owned();
        let mut variance = DVector::<f64>::zeros(n);
        for a in 1..self.coefficients.ncols() {
            for i in 0..n {
                let c = self.coefficients[(i, a)];
                variance[i] += c * c;
            }
        }
        (mean, variance)
    }

    /// Writes the coefficients as a text header plus one row per basis
    /// function (the columns of `X` in order).
    pub fn write_coefficients<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# specgal galerkin coefficients")?;
        writeln!(out, "# n_state: {}", self.n_state())?;
        writeln!(out, "# dim: {}", self.basis.dim())?;
        writeln!(out, "# n_basis: {}", self.basis.len())?;
        writeln!(out, "# basis_kind: {}", self.basis.kind())?;
        writeln!(out, "# ordering: graded-lex")?;
        for a in 0..self.basis.len() {
            let col = self.coefficients.column(a);
            let mut line = String::with_capacity(col.len() * 24);
            for (i, v) in col.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push_str(&format!("{v:.17e}"));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Reads a coefficient matrix written by
    /// [`GalerkinSolution::write_coefficients`]. Header metadata is checked
    /// against the supplied basis.
    pub fn read_coefficients<R: BufRead>(reader: R, basis: MultiIndexSet) -> Result<Self> {
        let mut n_state: Option<usize> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("n_state:") {
                    n_state = Some(
                        v.trim()
                            .parse()
                            .map_err(|e| Error::Parse(format!("n_state: {e}")))?,
                    );
                } else if let Some(v) = rest.strip_prefix("n_basis:") {
                    let n_basis: usize = v
                        .trim()
                        .parse()
                        .map_err(|e| Error::Parse(format!("n_basis: {e}")))?;
                    if n_basis != basis.len() {
                        return Err(Error::Parse(format!(
                            "file has {n_basis} basis functions, expected {}",
                            basis.len()
                        )));
                    }
                }
                continue;
            }
            let row: Vec<f64> = trimmed
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(e.to_string())))
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        let n_state = n_state.ok_or_else(|| Error::Parse("missing n_state header".into()))?;
        if rows.len() != basis.len() {
            return Err(Error::Parse(format!(
                "expected {} coefficient rows, found {}",
                basis.len(),
                rows.len()
            )));
        }
        let mut coefficients = DMatrix::<f64>::zeros(n_state, basis.len());
        for (a, row) in rows.iter().enumerate() {
            if row.len() != n_state {
                return Err(Error::Parse(format!(
                    "row {a} has {} values, expected {n_state}",
                    row.len()
                )));
            }
            for (i, &v) in row.iter().enumerate() {
                coefficients[(i, a)] = v;
            }
        }
        Ok(Self::new(
            coefficients,
            basis,
            Vec::new(),
            0,
            SolveStatus::Converged,
        ))
    }

    /// Writes the residual history as `iteration,residual_2norm` CSV rows.
    pub fn write_residual_history<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iteration,residual_2norm")?;
        for (k, r) in self.residual_history.iter().enumerate() {
            writeln!(out, "{k},{r:.17e}")?;
        }
        Ok(())
    }
}
