use nalgebra::DMatrix;

use crate::basis::legendre::recurrence_b;
use crate::error::{Error, Result};

/// Default cap on tensor-rule point counts, to fail fast on accidental
/// dimension explosions.
pub const DEFAULT_POINT_CAP: usize = 100_000_000;

/// A univariate quadrature rule on `[-1,1]` with weights normalized to the
/// uniform probability density (weights sum to 1).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `m`-point Gauss-Legendre rule on `[-1,1]` in the probability convention.
///
/// Nodes and weights come from the eigendecomposition of the symmetric
/// tridiagonal Jacobi matrix (Golub-Welsch): nodes are the eigenvalues and
/// each weight is the squared first component of the corresponding
/// normalized eigenvector. The rule integrates polynomials of degree up to
/// `2m - 1` exactly against the density `1/2`. Nodes are returned ascending
/// and exactly symmetric about zero.
pub fn gauss_legendre_rule(m: usize) -> Result<GaussRule> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "quadrature rule needs at least one point".into(),
        ));
    }
    if m == 1 {
        return Ok(GaussRule {
            nodes: vec![0.0],
            weights: vec![1.0],
        });
    }
    let mut jacobi = DMatrix::<f64>::zeros(m, m);
    for k in 1..m {
        let b = recurrence_b(k);
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eigen = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = eigen
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &node)| {
            let first = eigen.eigenvectors[(0, i)];
            (node, first * first)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();

    // The rule is symmetric; enforce it exactly so that downstream code sees
    // bit-symmetric nodes and a true zero midpoint for odd m.
    for i in 0..m / 2 {
        let j = m - 1 - i;
        let node = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -node;
        nodes[j] = node;
        let weight = 0.5 * (weights[i] + weights[j]);
        weights[i] = weight;
        weights[j] = weight;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(GaussRule { nodes, weights })
}

/// Points and weights of a full tensor-product Gauss-Legendre rule on
/// `[-1,1]^d`.
///
/// Point `i` occupies `points[i*d .. (i+1)*d]`; the enumeration is an
/// odometer over the univariate rules with the last dimension varying
/// fastest. Weights are products of univariate weights and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorQuadrature {
    dim: usize,
    orders: Vec<usize>,
    univariate: Vec<GaussRule>,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl TensorQuadrature {
    /// Tensor rule with `orders[i]` Gauss-Legendre points in dimension `i`,
    /// capped at [`DEFAULT_POINT_CAP`] total points.
    pub fn tensor(orders: &[usize]) -> Result<Self> {
        Self::tensor_with_cap(orders, DEFAULT_POINT_CAP)
    }

    /// Same as [`TensorQuadrature::tensor`] with an explicit point cap.
    pub fn tensor_with_cap(orders: &[usize], cap: usize) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::InvalidArgument(
                "tensor rule requires at least one dimension".into(),
            ));
        }
        if orders.iter().any(|&m| m == 0) {
            return Err(Error::InvalidArgument(
                "tensor rule orders must all be >= 1".into(),
            ));
        }
        let requested: u128 = orders.iter().map(|&m| m as u128).product();
        if requested > cap as u128 {
            return Err(Error::PointCapExceeded { requested, cap });
        }
        let total = requested as usize;
        let dim = orders.len();
        let univariate: Vec<GaussRule> = orders
            .iter()
            .map(|&m| gauss_legendre_rule(m))
            .collect::<Result<_>>()?;

        let mut points = Vec::with_capacity(total * dim);
        let mut weights = Vec::with_capacity(total);
        let mut counter = vec![0usize; dim];
        'outer: loop {
            let mut weight = 1.0;
            for (rule, &c) in univariate.iter().zip(&counter) {
                points.push(rule.nodes[c]);
                weight *= rule.weights[c];
            }
            weights.push(weight);
            let mut pos = dim;
            while pos > 0 {
                pos -= 1;
                if counter[pos] + 1 < orders[pos] {
                    counter[pos] += 1;
                    for c in counter.iter_mut().skip(pos + 1) {
                        *c = 0;
                    }
                    continue 'outer;
                }
            }
            break;
        }
        debug_assert_eq!(weights.len(), total);
        Ok(Self {
            dim,
            orders: orders.to_vec(),
            univariate,
            points,
            weights,
        })
    }

    /// Isotropic tensor rule: `order` points in each of `dim` dimensions.
    pub fn isotropic(dim: usize, order: usize) -> Result<Self> {
        Self::tensor(&vec![order; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    /// Total number of tensor points.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn univariate(&self, dim: usize) -> &GaussRule {
        &self.univariate[dim]
    }

    /// Quadrature mean of a scalar function.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        (0..self.len())
            .map(|i| self.weight(i) * f(self.point(i)))
            .sum()
    }
}
