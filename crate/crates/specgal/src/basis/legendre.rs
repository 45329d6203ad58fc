//! Orthonormal Legendre polynomials under the uniform probability weight.
//!
//! `pi_k` is normalized so that the integral of `pi_j pi_k` against the
//! density `1/2` on `[-1,1]` is the Kronecker delta. With the classical
//! Legendre polynomials `P_k` (with `P_k(1) = 1`) this means
//! `pi_k = sqrt(2k+1) P_k`, and the three-term recurrence takes the
//! symmetric form `s pi_k = b_{k+1} pi_{k+1} + b_k pi_{k-1}` with
//! `b_k = k / sqrt(4k^2 - 1)`.

/// Off-diagonal recurrence coefficient `b_k = k / sqrt(4k^2 - 1)`.
///
/// These are also the off-diagonal entries of the Jacobi matrix whose
/// eigendecomposition yields the Gauss-Legendre rule.
pub fn recurrence_b(k: usize) -> f64 {
    let k = k as f64;
    k / (4.0 * k * k - 1.0).sqrt()
}

/// Evaluates the degree-`k` orthonormal Legendre polynomial at `s`.
///
/// Runs the normalized recurrence, which is numerically stable on `[-1,1]`
/// for any practical degree.
pub fn eval_orthonormal_legendre(k: usize, s: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut curr = 3f64.sqrt() * s;
    for j in 1..k {
        let next = (s * curr - recurrence_b(j) * prev) / recurrence_b(j + 1);
        prev = curr;
        curr = next;
    }
    curr
}

/// Evaluates all orthonormal Legendre polynomials of degree `0..=max_degree`
/// at `s`, writing into `out` (which must have length `max_degree + 1`).
pub fn eval_orthonormal_legendre_table(max_degree: usize, s: f64, out: &mut [f64]) {
    assert_eq!(out.len(), max_degree + 1);
    out[0] = 1.0;
    if max_degree == 0 {
        return;
    }
    out[1] = 3f64.sqrt() * s;
    for j in 1..max_degree {
        out[j + 1] = (s * out[j] - recurrence_b(j) * out[j - 1]) / recurrence_b(j + 1);
    }
}
