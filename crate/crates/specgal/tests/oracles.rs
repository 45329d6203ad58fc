//! Cross-module consistency against dense oracles: the factorization
//! identity, bitwise right-hand side assembly, preconditioner commutation,
//! and solver agreement.

mod common;

use std::sync::Arc;

use common::{legendre_dd, rel_frobenius, triple_product_galerkin};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use specgal::basis::{
    eval_orthonormal_legendre, EvalScratch, MultiIndexSet, TensorQuadrature,
};
use specgal::galerkin::{BasisQuadMatrix, GalerkinOperator, DENSE_ASSEMBLY_CAP};
use specgal::problems::{AffineSystem, IdentitySystem};
use specgal::solvers::{solve, PreconditionerSpec, SolverConfig, SolverMethod};
use specgal::{AssembledMatrix, Error, ParameterizedSystem, Result};

fn operator_for(
    system: Arc<dyn ParameterizedSystem>,
    degree: usize,
    order: usize,
) -> GalerkinOperator {
    let d = system.dim_parameters();
    let basis = MultiIndexSet::total_degree(d, degree).unwrap();
    let rule = TensorQuadrature::tensor(&vec![order; d]).unwrap();
    let bq = BasisQuadMatrix::build(basis, rule, 1e-10).unwrap();
    GalerkinOperator::new(bq, system).unwrap()
}

#[test]
fn legendre_matches_double_double_oracle_to_high_degree() {
    let points = [-1.0, -0.987, -0.5, -0.113, 0.0, 0.2227, 0.661, 0.95, 1.0];
    for k in 0..=50 {
        for &s in &points {
            let got = eval_orthonormal_legendre(k, s);
            let want = legendre_dd(k, s);
            assert!(got.is_finite());
            let tol = 1e-10 * want.abs().max(1e-3);
            assert!(
                (got - want).abs() <= tol,
                "k={k} s={s}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn factorization_identity_against_triple_product() {
    // dense quadrature summation == (Q x I) blockdiag (Q x I)^T == matvec
    let cases = [
        (2usize, 1usize, 2usize, 4usize, 11u64),
        (3, 2, 1, 3, 5),
        (4, 3, 2, 4, 99),
    ];
    for (n, d, degree, order, seed) in cases {
        let system = Arc::new(AffineSystem::random_spd(n, d, seed));
        let op = operator_for(system, degree, order);
        let dense = op.assemble_dense_galerkin(DENSE_ASSEMBLY_CAP).unwrap();
        let triple = triple_product_galerkin(&op);
        let rel = rel_frobenius(&triple, &dense);
        assert!(rel <= 1e-12, "triple product deviates: {rel:.3e}");

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        for _ in 0..5 {
            let u: Vec<f64> = (0..op.dim()).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let got = DVector::from_vec(op.matvec_owned(&u).unwrap());
            let want = &dense * DVector::from_column_slice(&u);
            let rel = (&got - &want).norm() / want.norm().max(1e-300);
            assert!(rel <= 1e-12, "matvec deviates: {rel:.3e}");
        }
    }
}

#[test]
fn rhs_assembly_is_bitwise_direct_summation() {
    let system = Arc::new(AffineSystem::random(5, 2, 23));
    let op = operator_for(system.clone(), 2, 4);
    let rhs = op.assemble_rhs().unwrap();

    // independent direct summation in the same quadrature order
    let basis = op.basis();
    let quad = op.quadrature();
    let n = op.dim_state();
    let mut scratch = EvalScratch::new(basis);
    let mut pi = vec![0.0; basis.len()];
    let mut b_vec = vec![0.0; n];
    for (a, alpha_block) in rhs.as_slice().chunks(n).enumerate() {
        let mut acc = vec![0.0f64; n];
        for b in 0..quad.len() {
            let point = quad.point(b);
            system.rhs_at(point, &mut b_vec).unwrap();
            basis.evaluate_into(point, &mut scratch, &mut pi).unwrap();
            let scale = quad.weight(b) * pi[a];
            for (dst, &src) in acc.iter_mut().zip(&b_vec) {
                *dst += scale * src;
            }
        }
        for (i, (&got, &want)) in alpha_block.iter().zip(&acc).enumerate() {
            assert!(
                got == want,
                "block {a} entry {i} differs bitwise: {got:?} vs {want:?}"
            );
        }
    }
}

#[test]
fn rhs_of_separable_product_hits_only_mixed_block() {
    // d=2, b(s) = s1 * s2: only the (1,1) block is nonzero, value 1/3.
    struct ProductRhs;
    impl ParameterizedSystem for ProductRhs {
        fn dim_parameters(&self) -> usize {
            2
        }
        fn dim_state(&self) -> usize {
            1
        }
        fn apply_at(&self, _p: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
            out.copy_from_slice(v);
            Ok(())
        }
        fn rhs_at(&self, p: &[f64], out: &mut [f64]) -> Result<()> {
            out[0] = p[0] * p[1];
            Ok(())
        }
        fn is_symmetric(&self) -> bool {
            true
        }
    }
    let basis = MultiIndexSet::total_degree(2, 2).unwrap();
    let rule = TensorQuadrature::tensor(&[3, 3]).unwrap();
    let bq = BasisQuadMatrix::build(basis, rule, 1e-10).unwrap();
    let op = GalerkinOperator::with_cache_mode(
        bq,
        Arc::new(ProductRhs),
        specgal::galerkin::CacheMode::Never,
    )
    .unwrap();
    let rhs = op.assemble_rhs().unwrap();
    let idx = op
        .basis()
        .indices()
        .iter()
        .position(|i| i.entries() == [1, 1])
        .unwrap();
    for (a, &value) in rhs.iter().enumerate() {
        if a == idx {
            assert!((value - 1.0 / 3.0).abs() < 1e-14, "block (1,1) = {value}");
        } else {
            assert!(value.abs() < 1e-14, "block {a} = {value}");
        }
    }
}

#[test]
fn preconditioner_commutes_past_q_kron_i() {
    // (I x P^{-1}) G v equals the matvec of the system lambda -> P^{-1} A(lambda).
    struct PreMultiplied {
        inner: Arc<AffineSystem>,
        p_inv: DMatrix<f64>,
    }
    impl ParameterizedSystem for PreMultiplied {
        fn dim_parameters(&self) -> usize {
            self.inner.dim_parameters()
        }
        fn dim_state(&self) -> usize {
            self.inner.dim_state()
        }
        fn apply_at(&self, point: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
            let mut tmp = vec![0.0; v.len()];
            self.inner.apply_at(point, v, &mut tmp)?;
            let tmp = DVector::from_vec(tmp);
            let mut out_view = nalgebra::DVectorViewMut::from_slice(out, out.len());
            out_view.gemv(1.0, &self.p_inv, &tmp, 0.0);
            Ok(())
        }
        fn rhs_at(&self, point: &[f64], out: &mut [f64]) -> Result<()> {
            self.inner.rhs_at(point, out)
        }
        fn is_symmetric(&self) -> bool {
            false
        }
    }

    let system = Arc::new(AffineSystem::random_spd(4, 2, 8));
    let op = operator_for(system.clone(), 2, 3);
    let precond = PreconditionerSpec::Midpoint
        .build(system.as_ref(), op.quadrature())
        .unwrap();
    let p_inv = system
        .assemble_at(&[0.0, 0.0])
        .unwrap()
        .to_dense()
        .try_inverse()
        .unwrap();
    let pre_system = Arc::new(PreMultiplied {
        inner: system,
        p_inv,
    });
    let basis = MultiIndexSet::total_degree(2, 2).unwrap();
    let rule = TensorQuadrature::tensor(&[3, 3]).unwrap();
    let bq = BasisQuadMatrix::build(basis, rule, 1e-10).unwrap();
    let pre_op = GalerkinOperator::with_cache_mode(
        bq,
        pre_system,
        specgal::galerkin::CacheMode::Never,
    )
    .unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(123);
    for _ in 0..5 {
        let v: Vec<f64> = (0..op.dim()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let mut left = op.matvec_owned(&v).unwrap();
        precond.apply_inv_in_place(&mut left);
        let right = pre_op.matvec_owned(&v).unwrap();
        let scale = right.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
        for i in 0..left.len() {
            assert!(
                (left[i] - right[i]).abs() <= 1e-12 * scale,
                "entry {i}: {} vs {}",
                left[i],
                right[i]
            );
        }
    }
}

#[test]
fn preconditioning_preserves_the_solution() {
    let system = Arc::new(AffineSystem::random_spd(6, 2, 61));
    let op = operator_for(system.clone(), 2, 4);
    let rhs = op.assemble_rhs().unwrap();
    let rtol = 1e-9;
    let config = SolverConfig::new(SolverMethod::Minres).with_rtol(rtol);
    let plain = solve(&op, rhs.as_slice(), &config, None).unwrap();
    for spec in [
        PreconditionerSpec::Midpoint,
        PreconditionerSpec::Mean { order: 2 },
        PreconditionerSpec::Random { seed: 4 },
    ] {
        let precond = spec.build(system.as_ref(), op.quadrature()).unwrap();
        let preconditioned = solve(&op, rhs.as_slice(), &config, Some(&precond)).unwrap();
        assert!(preconditioned.converged());
        let dev = (preconditioned.coefficients() - plain.coefficients()).norm()
            / plain.coefficients().norm();
        assert!(dev <= 10.0 * rtol, "{spec}: deviation {dev:.3e}");
    }
}

#[test]
fn cg_and_minres_agree_on_spd() {
    let system = Arc::new(AffineSystem::random_spd(7, 2, 3));
    let op = operator_for(system, 2, 4);
    let rhs = op.assemble_rhs().unwrap();
    let rtol = 1e-10;
    let cg = solve(
        &op,
        rhs.as_slice(),
        &SolverConfig::new(SolverMethod::Cg).with_rtol(rtol),
        None,
    )
    .unwrap();
    let minres = solve(
        &op,
        rhs.as_slice(),
        &SolverConfig::new(SolverMethod::Minres).with_rtol(rtol),
        None,
    )
    .unwrap();
    assert!(cg.converged() && minres.converged());
    let dev =
        (cg.coefficients() - minres.coefficients()).norm() / minres.coefficients().norm();
    assert!(dev <= 10.0 * rtol, "deviation {dev:.3e}");
}

#[test]
fn symmetric_operator_inherits_symmetry() {
    let system = Arc::new(AffineSystem::random_spd(5, 2, 17));
    let op = operator_for(system, 2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..5 {
        let u: Vec<f64> = (0..op.dim()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let v: Vec<f64> = (0..op.dim()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let gu = op.matvec_owned(&u).unwrap();
        let gv = op.matvec_owned(&v).unwrap();
        let ugv: f64 = u.iter().zip(&gv).map(|(a, b)| a * b).sum();
        let vgu: f64 = v.iter().zip(&gu).map(|(a, b)| a * b).sum();
        let unorm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((ugv - vgu).abs() <= 1e-10 * unorm * vnorm);
    }
}

#[test]
fn eigenvalues_of_dense_galerkin_respect_bounds() {
    for seed in [1u64, 2, 3] {
        let system = Arc::new(AffineSystem::random_spd(5, 2, seed));
        let op = operator_for(system, 2, 3);
        let (lower, upper) = op.eigenvalue_bounds().unwrap();
        let dense = op.assemble_dense_galerkin(DENSE_ASSEMBLY_CAP).unwrap();
        let eigs = dense.symmetric_eigen().eigenvalues;
        let slack = 1e-10 * (1.0 + upper.abs());
        for &e in eigs.iter() {
            assert!(e >= lower - slack, "{e} below {lower}");
            assert!(e <= upper + slack, "{e} above {upper}");
        }
    }
}

#[test]
fn surrogate_reproduces_polynomial_solutions_at_gauss_points() {
    // A = I with a degree-1 rhs: the Galerkin surrogate equals b exactly,
    // so evaluating at quadrature points reproduces b(lambda).
    let n = 3;
    let b0 = vec![1.0, -0.5, 2.0];
    let b1 = vec![0.25, 1.0, -1.5];
    let system = Arc::new(IdentitySystem::new(n, 1, b0, vec![b1]));
    let op = operator_for(system.clone(), 1, 3);
    let rhs = op.assemble_rhs().unwrap();
    let sol = solve(
        &op,
        rhs.as_slice(),
        &SolverConfig::new(SolverMethod::Cg).with_rtol(1e-13),
        None,
    )
    .unwrap();
    let quad = op.quadrature();
    let mut expected = vec![0.0; n];
    for b in 0..quad.len() {
        let point = quad.point(b);
        system.rhs_at(point, &mut expected).unwrap();
        let got = sol.evaluate(point).unwrap();
        for i in 0..n {
            assert!(
                (got[i] - expected[i]).abs() < 1e-10,
                "point {point:?} entry {i}"
            );
        }
    }
}

#[test]
fn moments_of_linear_solution_are_analytic() {
    // A = I, b = b0 + b1 s: mean b0, variance b1^2 / 3.
    let b0 = vec![2.0, -1.0];
    let b1 = vec![3.0, 0.5];
    let system = Arc::new(IdentitySystem::new(2, 1, b0.clone(), vec![b1.clone()]));
    let op = operator_for(system, 1, 2);
    let rhs = op.assemble_rhs().unwrap();
    let sol = solve(
        &op,
        rhs.as_slice(),
        &SolverConfig::new(SolverMethod::Minres).with_rtol(1e-13),
        None,
    )
    .unwrap();
    let (mean, variance) = sol.moments();
    for i in 0..2 {
        assert!((mean[i] - b0[i]).abs() <= 1e-12);
        assert!((variance[i] - b1[i] * b1[i] / 3.0).abs() <= 1e-12);
    }
}

#[test]
fn matvec_failure_reports_offending_point() {
    struct FailsAt {
        bad: f64,
    }
    impl ParameterizedSystem for FailsAt {
        fn dim_parameters(&self) -> usize {
            1
        }
        fn dim_state(&self) -> usize {
            2
        }
        fn apply_at(&self, p: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
            if (p[0] - self.bad).abs() < 0.2 {
                return Err(Error::SystemEval {
                    point: vec![],
                    message: "solver backend unavailable".into(),
                });
            }
            out.copy_from_slice(v);
            Ok(())
        }
        fn rhs_at(&self, _p: &[f64], out: &mut [f64]) -> Result<()> {
            out.fill(1.0);
            Ok(())
        }
        fn is_symmetric(&self) -> bool {
            true
        }
    }
    let bad = 1.0 / 3f64.sqrt();
    let basis = MultiIndexSet::total_degree(1, 1).unwrap();
    let rule = TensorQuadrature::tensor(&[2]).unwrap();
    let bq = BasisQuadMatrix::build(basis, rule, 1e-10).unwrap();
    let op = GalerkinOperator::with_cache_mode(
        bq,
        Arc::new(FailsAt { bad }),
        specgal::galerkin::CacheMode::Never,
    )
    .unwrap();
    let u = vec![1.0; op.dim()];
    match op.matvec_owned(&u) {
        Err(Error::SystemEval { point, message }) => {
            assert!((point[0] - bad).abs() < 1e-12, "point {point:?}");
            assert!(message.contains("unavailable"));
        }
        other => panic!("expected SystemEval, got {other:?}"),
    }
}

#[test]
fn cached_and_uncached_matvec_agree() {
    let system = Arc::new(AffineSystem::random_spd(5, 2, 70));
    let basis = MultiIndexSet::total_degree(2, 2).unwrap();
    let rule = TensorQuadrature::tensor(&[4, 4]).unwrap();
    let bq = BasisQuadMatrix::build(basis, rule, 1e-10).unwrap();
    let cached = GalerkinOperator::with_cache_mode(
        bq.clone(),
        system.clone(),
        specgal::galerkin::CacheMode::Always,
    )
    .unwrap();
    let uncached =
        GalerkinOperator::with_cache_mode(bq, system, specgal::galerkin::CacheMode::Never)
            .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u: Vec<f64> = (0..cached.dim()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let a = cached.matvec_owned(&u).unwrap();
    let b = uncached.matvec_owned(&u).unwrap();
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for i in 0..a.len() {
        assert!((a[i] - b[i]).abs() <= 1e-12 * scale);
    }
}

#[test]
fn reference_scale_shape_matvec() {
    // N = 1921 states, 126 basis polynomials, order-12 tensor rule in four
    // parameters: unknown vectors have length 242,046 and the identity
    // system must pass through untouched.
    let system = Arc::new(IdentitySystem::with_constant_rhs(1921, 4));
    let basis = MultiIndexSet::total_degree(4, 5).unwrap();
    let rule = TensorQuadrature::tensor(&[12, 12, 12, 12]).unwrap();
    let bq = BasisQuadMatrix::build(basis, rule, 1e-10).unwrap();
    let op = GalerkinOperator::with_cache_mode(
        bq,
        system,
        specgal::galerkin::CacheMode::Never,
    )
    .unwrap();
    assert_eq!(op.dim(), 242_046);
    let u: Vec<f64> = (0..op.dim()).map(|i| ((i % 97) as f64) * 0.01 - 0.5).collect();
    let v = op.matvec_owned(&u).unwrap();
    let mut worst = 0.0f64;
    for (a, b) in u.iter().zip(&v) {
        worst = worst.max((a - b).abs());
    }
    assert!(worst <= 1e-12, "identity matvec deviation {worst:.3e}");
}

#[test]
fn dense_assembly_requires_assemble_support() {
    struct MatrixFreeOnly;
    impl ParameterizedSystem for MatrixFreeOnly {
        fn dim_parameters(&self) -> usize {
            1
        }
        fn dim_state(&self) -> usize {
            2
        }
        fn apply_at(&self, _p: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
            out.copy_from_slice(v);
            Ok(())
        }
        fn rhs_at(&self, _p: &[f64], out: &mut [f64]) -> Result<()> {
            out.fill(1.0);
            Ok(())
        }
        fn is_symmetric(&self) -> bool {
            true
        }
    }
    let basis = MultiIndexSet::total_degree(1, 1).unwrap();
    let rule = TensorQuadrature::tensor(&[2]).unwrap();
    let bq = BasisQuadMatrix::build(basis, rule, 1e-10).unwrap();
    let op = GalerkinOperator::new(bq, Arc::new(MatrixFreeOnly)).unwrap();
    assert!(matches!(
        op.assemble_dense_galerkin(100),
        Err(Error::AssembleUnsupported)
    ));
    assert!(matches!(
        PreconditionerSpec::Midpoint.build(&MatrixFreeOnly, op.quadrature()),
        Err(Error::AssembleUnsupported)
    ));
}

#[test]
fn assembled_matrix_kinds_agree() {
    // Sparse and dense assemblies of the same matrix act identically.
    let system = AffineSystem::random_spd(4, 1, 6);
    let point = [0.3];
    let dense = system.assemble_at(&point).unwrap().to_dense();
    let sparse = {
        let mut triplets = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                triplets.push((i, j, dense[(i, j)]));
            }
        }
        AssembledMatrix::Sparse(specgal::linalg::CsrMatrix::from_triplets(4, 4, &triplets))
    };
    let v = [1.0, -2.0, 0.5, 3.0];
    let mut out_dense = [0.0; 4];
    let mut out_sparse = [0.0; 4];
    AssembledMatrix::Dense(dense).matvec_into(&v, &mut out_dense);
    sparse.matvec_into(&v, &mut out_sparse);
    for i in 0..4 {
        assert!((out_dense[i] - out_sparse[i]).abs() < 1e-14);
    }
}
