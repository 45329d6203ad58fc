use std::fmt;

use crate::basis::legendre::eval_orthonormal_legendre_table;
use crate::error::{Error, Result};

/// A tuple of per-dimension polynomial degrees identifying one multivariate
/// basis polynomial `pi_a(s) = pi_{a_1}(s_1) ... pi_{a_d}(s_d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    entries: Vec<usize>,
}

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        assert!(!entries.is_empty(), "multi-index must have dimension >= 1");
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Total degree `a_1 + ... + a_d`.
    pub fn degree(&self) -> usize {
        self.entries.iter().sum()
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&a| a == 0)
    }

    /// Graded lexicographic key: total degree first, then entry order.
    fn graded_lex_key(&self) -> (usize, &[usize]) {
        (self.degree(), &self.entries)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// How a [`MultiIndexSet`] was constructed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasisKind {
    /// All indices with total degree at most `n`.
    TotalDegree(usize),
    /// All indices bounded componentwise by the given per-dimension orders.
    Tensor(Vec<usize>),
    /// An explicit, caller-supplied list.
    Explicit,
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisKind::TotalDegree(n) => write!(f, "total-degree({n})"),
            BasisKind::Tensor(orders) => {
                write!(f, "tensor(")?;
                for (i, m) in orders.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{m}")?;
                }
                write!(f, ")")
            }
            BasisKind::Explicit => write!(f, "explicit"),
        }
    }
}

/// An ordered set of `d`-dimensional multi-indices defining the polynomial
/// approximation space.
///
/// Indices are stored in graded lexicographic order (ascending total degree,
/// ties broken lexicographically), so index 0 is always the zero multi-index
/// and moment extraction can read the mean off the first coefficient column.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexSet {
    dim: usize,
    indices: Vec<MultiIndex>,
    kind: BasisKind,
}

impl MultiIndexSet {
    /// All multi-indices with `a_1 + ... + a_d <= n`.
    ///
    /// The cardinality is `binomial(n + d, n)`.
    pub fn total_degree(dim: usize, n: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "total-degree basis requires dimension >= 1".into(),
            ));
        }
        let mut indices = Vec::with_capacity(binomial(n + dim, n) as usize);
        let mut scratch = vec![0usize; dim];
        for degree in 0..=n {
            push_compositions(degree, 0, &mut scratch, &mut indices);
        }
        Ok(Self {
            dim,
            indices,
            kind: BasisKind::TotalDegree(n),
        })
    }

    /// All multi-indices bounded componentwise by `orders`, i.e. the full
    /// anisotropic tensor basis with `prod(orders_i + 1)` members.
    pub fn anisotropic_tensor(orders: &[usize]) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::InvalidArgument(
                "tensor basis requires at least one order".into(),
            ));
        }
        let dim = orders.len();
        let count: u128 = orders.iter().map(|&m| (m + 1) as u128).product();
        let count = usize::try_from(count).map_err(|_| Error::InvalidArgument(
            "tensor basis cardinality overflows usize".into(),
        ))?;
        let mut indices = Vec::with_capacity(count);
        let mut current = vec![0usize; dim];
        'outer: loop {
            indices.push(MultiIndex::new(current.clone()));
            // odometer increment, last dimension fastest
            let mut pos = dim;
            while pos > 0 {
                pos -= 1;
                if current[pos] < orders[pos] {
                    current[pos] += 1;
                    for entry in current.iter_mut().skip(pos + 1) {
                        *entry = 0;
                    }
                    continue 'outer;
                }
            }
            break;
        }
        Self::from_sorted(dim, indices, BasisKind::Tensor(orders.to_vec()))
    }

    /// Builds a set from an explicit list of indices.
    ///
    /// The list must be duplicate-free, dimensionally consistent, and contain
    /// the zero index; it is stored in graded lexicographic order.
    pub fn from_indices(indices: Vec<MultiIndex>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument("empty multi-index list".into()));
        }
        let dim = indices[0].dim();
        for idx in &indices {
            if idx.dim() != dim {
                return Err(Error::DimensionMismatch {
                    context: "multi-index list",
                    expected: dim,
                    got: idx.dim(),
                });
            }
        }
        if !indices.iter().any(|i| i.is_zero()) {
            return Err(Error::InvalidArgument(
                "multi-index set must contain the zero index".into(),
            ));
        }
        Self::from_sorted(dim, indices, BasisKind::Explicit)
    }

    fn from_sorted(dim: usize, mut indices: Vec<MultiIndex>, kind: BasisKind) -> Result<Self> {
        indices.sort_by(|a, b| a.graded_lex_key().cmp(&b.graded_lex_key()));
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "duplicate multi-index in set".into(),
            ));
        }
        Ok(Self { dim, indices, kind })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn index(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }

    /// Largest degree appearing in each dimension.
    pub fn max_degree_per_dim(&self) -> Vec<usize> {
        let mut max = vec![0usize; self.dim];
        for idx in &self.indices {
            for (m, &a) in max.iter_mut().zip(idx.entries()) {
                *m = (*m).max(a);
            }
        }
        max
    }

    /// Evaluates the basis vector `pi(s)` at a point of the hypercube.
    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.evaluate_into(point, &mut EvalScratch::new(self), &mut out)?;
        Ok(out)
    }

    /// Evaluation with caller-provided scratch, for hot loops over many
    /// points.
    pub fn evaluate_into(
        &self,
        point: &[f64],
        scratch: &mut EvalScratch,
        out: &mut [f64],
    ) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "basis evaluation point",
                expected: self.dim,
                got: point.len(),
            });
        }
        assert_eq!(out.len(), self.len());
        for (dim, (&s, table)) in point.iter().zip(scratch.tables.iter_mut()).enumerate() {
            eval_orthonormal_legendre_table(scratch.max_degree[dim], s, table);
        }
        for (value, idx) in out.iter_mut().zip(&self.indices) {
            let mut prod = 1.0;
            for (dim, &a) in idx.entries().iter().enumerate() {
                prod *= scratch.tables[dim][a];
            }
            *value = prod;
        }
        Ok(())
    }
}

/// Per-dimension univariate evaluation tables reused across points.
pub struct EvalScratch {
    max_degree: Vec<usize>,
    tables: Vec<Vec<f64>>,
}

impl EvalScratch {
    pub fn new(set: &MultiIndexSet) -> Self {
        let max_degree = set.max_degree_per_dim();
        let tables = max_degree.iter().map(|&m| vec![0.0; m + 1]).collect();
        Self { max_degree, tables }
    }
}

/// Appends, in lexicographic order, all compositions of `degree` into the
/// remaining slots of `scratch` starting at `pos`.
fn push_compositions(
    degree: usize,
    pos: usize,
    scratch: &mut Vec<usize>,
    out: &mut Vec<MultiIndex>,
) {
    if pos + 1 == scratch.len() {
        scratch[pos] = degree;
        out.push(MultiIndex::new(scratch.clone()));
        return;
    }
    for first in 0..=degree {
        scratch[pos] = first;
        push_compositions(degree - first, pos + 1, scratch, out);
    }
}

/// Exact binomial coefficient, used for cardinality checks.
pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    assert!(k <= n);
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result * (n - i) as u128 / (i + 1) as u128;
    }
    result
}
