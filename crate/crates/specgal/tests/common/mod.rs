//! Shared oracle machinery for the integration tests: extended-precision
//! Legendre evaluation, dense Kronecker products, and the explicit
//! triple-product form of the factorized Galerkin matrix.

// Each test binary uses a different subset of these helpers.
#![allow(dead_code)]

use nalgebra::DMatrix;
use specgal::galerkin::GalerkinOperator;

/// Double-double value for the high-precision Legendre oracle. Only the
/// operations the three-term recurrence needs are implemented.
#[derive(Debug, Clone, Copy)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn sub(self, other: Dd) -> Dd {
        self.add(Dd {
            hi: -other.hi,
            lo: -other.lo,
        })
    }

    pub fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul(Dd::from_f64(q1)));
        let q2 = r.hi / other.hi;
        let (hi, lo) = two_sum(q1, q2);
        Dd { hi, lo }
    }

    pub fn sqrt(self) -> Dd {
        let s0 = self.hi.sqrt();
        if s0 == 0.0 {
            return Dd::from_f64(0.0);
        }
        // one Newton step in double-double
        let s = Dd::from_f64(s0);
        let r = self.sub(s.mul(s)).div(Dd::from_f64(2.0 * s0));
        s.add(r)
    }
}

/// Orthonormal Legendre value at `s` computed with double-double arithmetic,
/// independent of the library's f64 recurrence.
pub fn legendre_dd(k: usize, s: f64) -> f64 {
    let b = |j: usize| {
        let jf = Dd::from_f64(j as f64);
        let four = Dd::from_f64(4.0);
        let one = Dd::from_f64(1.0);
        jf.div(four.mul(jf).mul(jf).sub(one).sqrt())
    };
    if k == 0 {
        return 1.0;
    }
    let s_dd = Dd::from_f64(s);
    let mut prev = Dd::from_f64(1.0);
    let mut curr = Dd::from_f64(3.0).sqrt().mul(s_dd);
    for j in 1..k {
        let next = s_dd.mul(curr).sub(b(j).mul(prev)).div(b(j + 1));
        prev = curr;
        curr = next;
    }
    curr.to_f64()
}

/// Dense Kronecker product `a x b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::<f64>::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let scale = a[(i, j)];
            if scale == 0.0 {
                continue;
            }
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = scale * b[(p, q)];
                }
            }
        }
    }
    out
}

/// The Galerkin matrix assembled through the explicit triple product
/// `(Q x I) blockdiag(A(lambda_b)) (Q x I)^T` — the factorized route, as an
/// independent oracle against the quadrature-summation assembly and the
/// matrix-free matvec.
pub fn triple_product_galerkin(op: &GalerkinOperator) -> DMatrix<f64> {
    let n = op.dim_state();
    let n_basis = op.basis_quad().n_basis();
    let n_points = op.basis_quad().n_points();
    let q = op.basis_quad().matrix();
    let quad = op.quadrature();

    let q_kron_i = kron(q, &DMatrix::identity(n, n));
    let mut block_diag = DMatrix::<f64>::zeros(n * n_points, n * n_points);
    for b in 0..n_points {
        let a = op
            .system()
            .assemble_at(quad.point(b))
            .expect("oracle requires assembly")
            .to_dense();
        block_diag.view_mut((b * n, b * n), (n, n)).copy_from(&a);
    }
    let mut tmp = DMatrix::<f64>::zeros(n * n_basis, n * n_points);
    tmp.gemm(1.0, &q_kron_i, &block_diag, 0.0);
    let mut out = DMatrix::<f64>::zeros(n * n_basis, n * n_basis);
    out.gemm(1.0, &tmp, &q_kron_i.transpose(), 0.0);
    out
}

/// Relative Frobenius distance between two matrices.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
