//! Small dense/sparse helpers: a compressed-sparse-row matrix for the
//! finite-difference systems and a banded Cholesky factorization for their
//! fast solves.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Compressed sparse row matrix with `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from triplets. Duplicate entries are summed; column indices are
    /// sorted within each row.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Self {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for &(r, c, v) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet out of bounds");
            per_row[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.iter().peekable();
            while let Some(&(c, v)) = iter.next() {
                let mut sum = v;
                while let Some(&&(c2, v2)) = iter.peek() {
                    if c2 == c {
                        sum += v2;
                        iter.next();
                    } else {
                        break;
                    }
                }
                col_idx.push(c);
                values.push(sum);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// `out = A v`.
    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.n_cols);
        assert_eq!(out.len(), self.n_rows);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (&c, &a) in cols.iter().zip(vals) {
                acc += a * v[c];
            }
            out[r] = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut dense = DMatrix::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                dense[(r, c)] += v;
            }
        }
        dense
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.n_rows.min(self.n_cols);
        let mut diag = vec![0.0; n];
        for (r, d) in diag.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if c == r {
                    *d += v;
                }
            }
        }
        diag
    }

    /// Half bandwidth: the largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for r in 0..self.n_rows {
            let (cols, _) = self.row(r);
            for &c in cols {
                bw = bw.max(r.abs_diff(c));
            }
        }
        bw
    }

    /// Largest `|A - A^T|` entry, zero for symmetric matrices.
    pub fn max_asymmetry(&self) -> f64 {
        let mut max = 0.0f64;
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let vt = self.get(c, r);
                max = max.max((v - vt).abs());
            }
        }
        max
    }

    fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }
}

/// Cholesky factorization of a symmetric positive definite banded matrix in
/// LAPACK-style lower band storage: `band[r][j] = L[j + r, j]` for
/// `r = 0..=bandwidth`.
///
/// Factor and solve cost `O(n b^2)` and `O(n b)`, which is what makes the
/// eigenvalue point searches and block preconditioner solves cheap for the
/// finite-difference systems (bandwidth ~ grid width).
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bandwidth: usize,
    band: Vec<f64>, // (bandwidth + 1) x n, column j at stride (bandwidth + 1)
}

impl BandedCholesky {
    /// Factors a symmetric positive definite [`CsrMatrix`].
    pub fn new(matrix: &CsrMatrix) -> Result<Self> {
        let n = matrix.n_rows();
        if matrix.n_cols() != n {
            return Err(Error::InvalidArgument(
                "banded Cholesky requires a square matrix".into(),
            ));
        }
        let bandwidth = matrix.bandwidth();
        let stride = bandwidth + 1;
        let mut band = vec![0.0; stride * n];
        for r in 0..n {
            let (cols, vals) = matrix.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if r >= c {
                    band[c * stride + (r - c)] = v;
                }
            }
        }
        // In-place banded Cholesky, column by column.
        for j in 0..n {
            let pivot = band[j * stride];
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::SingularPreconditioner(format!(
                    "banded Cholesky pivot {pivot:.3e} at column {j} (matrix not SPD)"
                )));
            }
            let ljj = pivot.sqrt();
            band[j * stride] = ljj;
            let reach = bandwidth.min(n - 1 - j);
            for r in 1..=reach {
                band[j * stride + r] /= ljj;
            }
            for k in 1..=reach {
                let ljk = band[j * stride + k];
                if ljk == 0.0 {
                    continue;
                }
                let col = j + k;
                for r in k..=reach {
                    band[col * stride + (r - k)] -= band[j * stride + r] * ljk;
                }
            }
        }
        Ok(Self { n, bandwidth, band })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let stride = self.bandwidth + 1;
        // forward: L y = b
        for j in 0..self.n {
            let xj = x[j] / self.band[j * stride];
            x[j] = xj;
            let reach = self.bandwidth.min(self.n - 1 - j);
            for r in 1..=reach {
                x[j + r] -= self.band[j * stride + r] * xj;
            }
        }
        // backward: L^T x = y
        for j in (0..self.n).rev() {
            let reach = self.bandwidth.min(self.n - 1 - j);
            let mut acc = x[j];
            for r in 1..=reach {
                acc -= self.band[j * stride + r] * x[j + r];
            }
            x[j] = acc / self.band[j * stride];
        }
    }
}
