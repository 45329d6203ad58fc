use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::galerkin::{GalerkinOperator, GalerkinSolution, SolveStatus};
use crate::solvers::BlockPreconditioner;

/// How often the true residual `b - G x` is recomputed to guard against
/// recurrence drift.
const TRUE_RESIDUAL_REFRESH: usize = 25;

const BICGSTAB_BREAKDOWN: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    Cg,
    Minres,
    BiCgStab,
}

impl SolverMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SolverMethod::Cg => "cg",
            SolverMethod::Minres => "minres",
            SolverMethod::BiCgStab => "bicgstab",
        }
    }

    /// CG and MINRES require a symmetric Galerkin matrix.
    pub fn requires_symmetry(&self) -> bool {
        matches!(self, SolverMethod::Cg | SolverMethod::Minres)
    }
}

/// Krylov solve configuration.
///
/// Convergence is declared on the true unpreconditioned residual:
/// `||b - G x||_2 <= rtol ||b||_2`. Between the periodic exact
/// recomputations (every 25 iterations) the cheap per-iteration recurrence
/// residual stands in, and any crossing is confirmed against the exact
/// residual before the solver stops.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub rtol: f64,
    /// Defaults to `10 * N |I|` when `None`.
    pub maxiter: Option<usize>,
    pub record_history: bool,
}

impl SolverConfig {
    pub fn new(method: SolverMethod) -> Self {
        Self {
            method,
            rtol: 1e-8,
            maxiter: None,
            record_history: true,
        }
    }

    pub fn with_rtol(mut self, rtol: f64) -> Self {
        assert!(rtol > 0.0);
        self.rtol = rtol;
        self
    }

    pub fn with_maxiter(mut self, maxiter: usize) -> Self {
        assert!(maxiter >= 1);
        self.maxiter = Some(maxiter);
        self
    }

    pub fn with_history(mut self, record: bool) -> Self {
        self.record_history = record;
        self
    }
}

/// Solves the Galerkin system `G x = rhs` with the configured Krylov method
/// and optional block-diagonal preconditioner (applied from the left; MINRES
/// and CG use the preconditioner inner product, which preserves symmetry).
///
/// Returns the coefficients reshaped to `N x |I|` along with the iteration
/// count and residual history. Hitting the iteration budget or a recurrence
/// breakdown is reported through [`SolveStatus`] on the returned solution,
/// with the best iterate preserved.
pub fn solve(
    op: &GalerkinOperator,
    rhs: &[f64],
    config: &SolverConfig,
    precond: Option<&BlockPreconditioner>,
) -> Result<GalerkinSolution> {
    if rhs.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            context: "solver right-hand side",
            expected: op.dim(),
            got: rhs.len(),
        });
    }
    if config.method.requires_symmetry() && !op.system().is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    if let Some(p) = precond {
        if p.n() != op.dim_state() {
            return Err(Error::DimensionMismatch {
                context: "preconditioner block size",
                expected: op.dim_state(),
                got: p.n(),
            });
        }
    }
    let maxiter = config.maxiter.unwrap_or(10 * op.dim());
    let outcome = match config.method {
        SolverMethod::Minres => minres(op, rhs, config.rtol, maxiter, precond)?,
        SolverMethod::Cg => cg(op, rhs, config.rtol, maxiter, precond)?,
        SolverMethod::BiCgStab => bicgstab(op, rhs, config.rtol, maxiter, precond)?,
    };
    let history = if config.record_history {
        outcome.history
    } else {
        Vec::new()
    };
    Ok(GalerkinSolution::from_stacked(
        outcome.x.as_slice(),
        op.dim_state(),
        op.basis().clone(),
        history,
        outcome.iterations,
        outcome.status,
    ))
}

struct SolveOutcome {
    x: DVector<f64>,
    iterations: usize,
    history: Vec<f64>,
    status: SolveStatus,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn apply_precond(precond: Option<&BlockPreconditioner>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = v.clone();
    if let Some(p) = precond {
        p.apply_inv_in_place(out.as_mut_slice());
    }
    out
}

/// Computes `b - G x` afresh.
fn true_residual(op: &GalerkinOperator, b: &[f64], x: &DVector<f64>) -> Result<DVector<f64>> {
    let mut out = vec![0.0; b.len()];
    op.matvec(x.as_slice(), &mut out)?;
    let mut r = DVector::<f64>::zeros(b.len());
    for i in 0..b.len() {
        r[i] = b[i] - out[i];
    }
    Ok(r)
}

/// Preconditioned MINRES (Paige-Saunders Lanczos with reflections).
///
/// The Lanczos runs on `M^{-1} G` in the `M` inner product, so the recorded
/// residual norms are `||r_k||_{M^{-1}}` — monotone by construction and
/// equal to the plain 2-norm when no preconditioner is given. The true
/// 2-norm residual used for stopping is carried by the companion recurrence
/// `r_k = s_k^2 r_{k-1} - c_k phibar_{k+1} z_{k+1}` and refreshed exactly
/// every [`TRUE_RESIDUAL_REFRESH`] iterations.
fn minres(
    op: &GalerkinOperator,
    b: &[f64],
    rtol: f64,
    maxiter: usize,
    precond: Option<&BlockPreconditioner>,
) -> Result<SolveOutcome> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut history = Vec::new();
    if bnorm == 0.0 {
        return Ok(SolveOutcome {
            x: DVector::zeros(n),
            iterations: 0,
            history: vec![0.0],
            status: SolveStatus::Converged,
        });
    }
    let target = rtol * bnorm;

    let mut x = DVector::<f64>::zeros(n);
    // z_1 = r_0 = b, q_1 = M^{-1} z_1
    let z1 = DVector::from_column_slice(b);
    let q1 = apply_precond(precond, &z1);
    let beta1_sq = z1.dot(&q1);
    if !(beta1_sq > 0.0) {
        return Err(Error::SingularPreconditioner(
            "preconditioner inner product of the residual is not positive".into(),
        ));
    }
    let beta1 = beta1_sq.sqrt();
    let mut phibar = beta1;
    history.push(phibar);

    // normalized Lanczos vectors: z in residual space, q = M^{-1} z
    let mut z_prev = DVector::<f64>::zeros(n);
    let mut z_curr = &z1 / beta1;
    let mut q_curr = &q1 / beta1;
    let mut beta = beta1; // beta_k (subdiagonal entry entering column k)

    // Reflection state; (-1, 0) is the reflection that acts as the identity
    // on the recurrences below, so no special-casing of the first steps.
    let (mut c_prev, mut s_prev) = (-1.0f64, 0.0f64); // step k-1
    let (mut c_prev2, mut s_prev2) = (-1.0f64, 0.0f64); // step k-2

    // direction recurrences
    let mut d_prev = DVector::<f64>::zeros(n);
    let mut d_prev2 = DVector::<f64>::zeros(n);

    // carried true residual
    let mut r_vec = DVector::from_column_slice(b);
    let mut rnorm = bnorm;
    let mut w = DVector::<f64>::zeros(n);

    let mut status = SolveStatus::MaxIterExceeded;
    let mut iterations = 0;
    for k in 1..=maxiter {
        iterations = k;
        // Lanczos step: w = G q_k - beta_k z_{k-1}; alpha = q_k . w;
        // w -= alpha z_k.
        op.matvec(q_curr.as_slice(), w.as_mut_slice())?;
        if k > 1 {
            w.axpy(-beta, &z_prev, 1.0);
        }
        let alpha = q_curr.dot(&w);
        w.axpy(-alpha, &z_curr, 1.0);
        let q_next_raw = apply_precond(precond, &w);
        let beta_next_sq = w.dot(&q_next_raw);
        if beta_next_sq < 0.0 {
            return Err(Error::SingularPreconditioner(
                "preconditioner is not positive definite".into(),
            ));
        }
        let beta_next = beta_next_sq.sqrt();

        // Apply the two stored reflections to the new tridiagonal column,
        // yielding (eps_k, delta_k, gammabar_k); then the new reflection
        // eliminates beta_{k+1}.
        let eps = s_prev2 * beta;
        let delta_tilde = -c_prev2 * beta;
        let delta = c_prev * delta_tilde + s_prev * alpha;
        let gammabar = s_prev * delta_tilde - c_prev * alpha;
        let gamma = (gammabar * gammabar + beta_next * beta_next).sqrt();
        if gamma == 0.0 || !gamma.is_finite() {
            return Err(Error::NonFinite("minres rotation"));
        }
        let c = gammabar / gamma;
        let s = beta_next / gamma;
        let phi = c * phibar;
        phibar *= s;

        // x update: d_k = (q_k - delta d_{k-1} - eps d_{k-2}) / gamma
        let mut d = q_curr.clone();
        d.axpy(-delta, &d_prev, 1.0);
        d.axpy(-eps, &d_prev2, 1.0);
        d /= gamma;
        x.axpy(phi, &d, 1.0);
        d_prev2 = std::mem::replace(&mut d_prev, d);

        history.push(phibar.abs());
        if !phibar.is_finite() {
            return Err(Error::NonFinite("minres residual estimate"));
        }

        // advance Lanczos vectors (skip on lucky breakdown)
        let exhausted = beta_next <= f64::EPSILON * gamma.abs().max(1.0);
        if !exhausted {
            let z_next = &w / beta_next;
            let q_next = &q_next_raw / beta_next;
            // companion recurrence: r_k = s^2 r_{k-1} - c phibar_{k+1} z_{k+1}
            r_vec *= s * s;
            r_vec.axpy(-c * phibar, &z_next, 1.0);
            rnorm = r_vec.norm();
            z_prev = std::mem::replace(&mut z_curr, z_next);
            q_curr = q_next;
            beta = beta_next;
        }

        (c_prev2, s_prev2) = (c_prev, s_prev);
        (c_prev, s_prev) = (c, s);

        let mut fresh = false;
        if exhausted || k % TRUE_RESIDUAL_REFRESH == 0 {
            r_vec = true_residual(op, b, &x)?;
            rnorm = r_vec.norm();
            fresh = true;
        }
        if !rnorm.is_finite() {
            return Err(Error::NonFinite("minres residual"));
        }
        if rnorm <= target {
            if !fresh {
                r_vec = true_residual(op, b, &x)?;
                rnorm = r_vec.norm();
            }
            if rnorm <= target {
                status = SolveStatus::Converged;
                break;
            }
        }
        if exhausted {
            status = SolveStatus::Breakdown("lanczos space exhausted".into());
            break;
        }
    }
    Ok(SolveOutcome {
        x,
        iterations,
        history,
        status,
    })
}

/// Preconditioned conjugate gradients.
///
/// The recurrence residual is explicit, so the stopping metric is available
/// every iteration; the history records `sqrt(r^T M^{-1} r)` to match the
/// MINRES convention.
fn cg(
    op: &GalerkinOperator,
    b: &[f64],
    rtol: f64,
    maxiter: usize,
    precond: Option<&BlockPreconditioner>,
) -> Result<SolveOutcome> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(SolveOutcome {
            x: DVector::zeros(n),
            iterations: 0,
            history: vec![0.0],
            status: SolveStatus::Converged,
        });
    }
    let target = rtol * bnorm;
    let mut x = DVector::<f64>::zeros(n);
    let mut r = DVector::from_column_slice(b);
    let mut z = apply_precond(precond, &r);
    let mut rz = r.dot(&z);
    if !(rz > 0.0) {
        return Err(Error::SingularPreconditioner(
            "preconditioner inner product of the residual is not positive".into(),
        ));
    }
    let mut history = vec![rz.sqrt()];
    let mut p = z.clone();
    let mut ap = DVector::<f64>::zeros(n);

    let mut status = SolveStatus::MaxIterExceeded;
    let mut iterations = 0;
    for k in 1..=maxiter {
        iterations = k;
        op.matvec(p.as_slice(), ap.as_mut_slice())?;
        let pap = p.dot(&ap);
        if pap <= 0.0 || !pap.is_finite() {
            status = SolveStatus::Breakdown(format!(
                "cg curvature p^T G p = {pap:.3e} is not positive"
            ));
            break;
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);

        let mut fresh = false;
        if k % TRUE_RESIDUAL_REFRESH == 0 {
            r = true_residual(op, b, &x)?;
            fresh = true;
        }
        z = apply_precond(precond, &r);
        let rz_next = r.dot(&z);
        history.push(rz_next.abs().sqrt());
        let rnorm = r.norm();
        if !rnorm.is_finite() {
            return Err(Error::NonFinite("cg residual"));
        }
        if rnorm <= target {
            if fresh {
                status = SolveStatus::Converged;
                break;
            }
            let exact = true_residual(op, b, &x)?;
            if exact.norm() <= target {
                status = SolveStatus::Converged;
                break;
            }
            r = exact;
            z = apply_precond(precond, &r);
            let rz_check = r.dot(&z);
            let beta = rz_check / rz;
            rz = rz_check;
            p = &z + &p * beta;
            continue;
        }
        if rz_next <= 0.0 {
            status = SolveStatus::Breakdown(
                "cg preconditioned residual norm lost positivity".into(),
            );
            break;
        }
        let beta = rz_next / rz;
        rz = rz_next;
        p = &z + &p * beta;
    }
    Ok(SolveOutcome {
        x,
        iterations,
        history,
        status,
    })
}

/// Left-preconditioned BiCGStab on `M^{-1} G x = M^{-1} b`.
///
/// The carried residual is the preconditioned one; its norm is recorded in
/// the history. Stopping calibrates the carried norm against the true
/// residual (recomputed every [`TRUE_RESIDUAL_REFRESH`] iterations and at
/// every threshold crossing). A vanishing `rho` or `omega` denominator is
/// reported as [`SolveStatus::Breakdown`].
fn bicgstab(
    op: &GalerkinOperator,
    b: &[f64],
    rtol: f64,
    maxiter: usize,
    precond: Option<&BlockPreconditioner>,
) -> Result<SolveOutcome> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(SolveOutcome {
            x: DVector::zeros(n),
            iterations: 0,
            history: vec![0.0],
            status: SolveStatus::Converged,
        });
    }
    let target = rtol * bnorm;
    let mut x = DVector::<f64>::zeros(n);
    // preconditioned residual
    let mut r = apply_precond(precond, &DVector::from_column_slice(b));
    let r_shadow = r.clone();
    let mut history = vec![r.norm()];
    // ratio of true to carried residual norm, from the latest exact check
    let mut calibration = bnorm / r.norm().max(1e-300);

    let mut rho = 1.0f64;
    let mut alpha = 1.0f64;
    let mut omega = 1.0f64;
    let mut v = DVector::<f64>::zeros(n);
    let mut p = DVector::<f64>::zeros(n);
    let mut work = vec![0.0; n];

    let mut status = SolveStatus::MaxIterExceeded;
    let mut iterations = 0;

    macro_rules! check_converged {
        ($x:expr) => {{
            let exact = true_residual(op, b, $x)?;
            let exact_norm = exact.norm();
            if !exact_norm.is_finite() {
                return Err(Error::NonFinite("bicgstab residual"));
            }
            (exact_norm <= target, exact_norm)
        }};
    }

    for k in 1..=maxiter {
        iterations = k;
        let rho_next = r_shadow.dot(&r);
        if rho_next.abs() < BICGSTAB_BREAKDOWN {
            status = SolveStatus::Breakdown(format!("bicgstab rho = {rho_next:.3e}"));
            break;
        }
        let beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        // p = r + beta (p - omega v)
        p.axpy(-omega, &v, 1.0);
        p *= beta;
        p += &r;
        // v = M^{-1} G p
        op.matvec(p.as_slice(), &mut work)?;
        v.copy_from_slice(&work);
        if let Some(m) = precond {
            m.apply_inv_in_place(v.as_mut_slice());
        }
        let denom = r_shadow.dot(&v);
        if denom.abs() < BICGSTAB_BREAKDOWN {
            status = SolveStatus::Breakdown(format!("bicgstab r_shadow^T v = {denom:.3e}"));
            break;
        }
        alpha = rho / denom;
        // s = r - alpha v (reuse r)
        r.axpy(-alpha, &v, 1.0);
        // early exit on a small intermediate residual
        if calibration * r.norm() <= target {
            x.axpy(alpha, &p, 1.0);
            let (ok, exact_norm) = check_converged!(&x);
            if ok {
                history.push(r.norm());
                status = SolveStatus::Converged;
                break;
            }
            calibration = exact_norm / r.norm().max(1e-300);
            x.axpy(-alpha, &p, 1.0);
        }
        // t = M^{-1} G s
        op.matvec(r.as_slice(), &mut work)?;
        let mut t = DVector::from_column_slice(&work);
        if let Some(m) = precond {
            m.apply_inv_in_place(t.as_mut_slice());
        }
        let tt = t.dot(&t);
        if tt.abs() < BICGSTAB_BREAKDOWN {
            status = SolveStatus::Breakdown(format!("bicgstab t^T t = {tt:.3e}"));
            break;
        }
        omega = t.dot(&r) / tt;
        if omega.abs() < BICGSTAB_BREAKDOWN {
            status = SolveStatus::Breakdown(format!("bicgstab omega = {omega:.3e}"));
            break;
        }
        // x += alpha p + omega s ; r = s - omega t
        x.axpy(alpha, &p, 1.0);
        x.axpy(omega, &r, 1.0);
        r.axpy(-omega, &t, 1.0);

        let rnorm_pre = r.norm();
        history.push(rnorm_pre);
        if !rnorm_pre.is_finite() {
            return Err(Error::NonFinite("bicgstab residual"));
        }
        if k % TRUE_RESIDUAL_REFRESH == 0 || calibration * rnorm_pre <= target {
            let (ok, exact_norm) = check_converged!(&x);
            if ok {
                status = SolveStatus::Converged;
                break;
            }
            calibration = exact_norm / rnorm_pre.max(1e-300);
        }
    }
    Ok(SolveOutcome {
        x,
        iterations,
        history,
        status,
    })
}
