//! Offline phase: infinite-horizon LQR for the penalty-augmented costs and
//! the cached matrices that make the online backward pass a sequence of
//! matrix-vector products.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::problem::{CostData, LinearDynamics, ValidatedProblem};

pub const DEFAULT_RICCATI_TOL: f64 = 1e-10;
pub const DEFAULT_RICCATI_MAX_ITER: usize = 10_000;
const P_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiccatiError {
    #[error("Riccati recursion did not converge within {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },
    #[error("R + BᵀPB is not positive definite")]
    FactorizationFailure,
    #[error("penalty rho must be positive and finite, got {0}")]
    InvalidRho(f64),
}

/// Everything precomputed for one value of `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverCache {
    pub rho: f64,
    /// Feedback gain, m×n.
    pub kinf: DMatrix<f64>,
    /// Cost-to-go Hessian, n×n.
    pub pinf: DMatrix<f64>,
    /// `(R̃ + BᵀPB)⁻¹`, m×m.
    pub c1: DMatrix<f64>,
    /// `(A - BK)ᵀ`, n×n.
    pub c2: DMatrix<f64>,
    /// `BᵀPc`, length m.
    pub c3: DVector<f64>,
    /// `C2 P c`, length n.
    pub c4: DVector<f64>,
}

impl SolverCache {
    /// Full offline phase with the default Riccati tolerance and iteration cap.
    pub fn new(problem: &ValidatedProblem, rho: f64) -> Result<Self, RiccatiError> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(RiccatiError::InvalidRho(rho));
        }
        let (q_aug, r_aug) = augment_costs(problem.cost(), rho);
        let (kinf, pinf) = compute_infinite_horizon(
            problem.dynamics(),
            &q_aug,
            &r_aug,
            DEFAULT_RICCATI_TOL,
            DEFAULT_RICCATI_MAX_ITER,
        )?;
        build_cache(problem.dynamics(), kinf, pinf, &r_aug, rho)
    }
}

/// `(Q + ρI, R + ρI)`.
pub fn augment_costs(cost: &CostData, rho: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut q = cost.q.clone();
    let mut r = cost.r.clone();
    for i in 0..q.nrows() {
        q[(i, i)] += rho;
    }
    for i in 0..r.nrows() {
        r[(i, i)] += rho;
    }
    (q, r)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// `(R + BᵀPB)⁻¹ BᵀPA` via Cholesky.
fn gain_from(
    dynamics: &LinearDynamics,
    r_aug: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<DMatrix<f64>, RiccatiError> {
    let bt_p = dynamics.b.transpose() * p;
    let s = r_aug + &bt_p * &dynamics.b;
    let chol = s.cholesky().ok_or(RiccatiError::FactorizationFailure)?;
    Ok(chol.solve(&(bt_p * &dynamics.a)))
}

/// Iterates the discrete Riccati recursion from `P = Q̃` until the largest
/// elementwise change in `K` drops below `tol`. The returned gain is
/// recomputed from the returned cost-to-go, so `K = (R̃ + BᵀPB)⁻¹BᵀPA` holds
/// to rounding.
pub fn compute_infinite_horizon(
    dynamics: &LinearDynamics,
    q_aug: &DMatrix<f64>,
    r_aug: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>), RiccatiError> {
    let (n, m) = (dynamics.a.nrows(), dynamics.b.ncols());
    let mut k = DMatrix::zeros(m, n);
    let mut p = q_aug.clone();
    let mut last_change = f64::INFINITY;

    for _ in 0..max_iter {
        let k_next = gain_from(dynamics, r_aug, &p)?;
        let closed = &dynamics.a - &dynamics.b * &k_next;
        let mut p_next =
            q_aug + k_next.transpose() * r_aug * &k_next + closed.transpose() * &p * &closed;
        symmetrize(&mut p_next);

        last_change = (&k_next - &k).amax();
        if !last_change.is_finite() || !p_next.iter().all(|v| v.is_finite()) {
            break;
        }
        // An unstable mode the input cannot reach leaves K constant while P
        // keeps growing, so P has to settle as well.
        let p_settled = (&p_next - &p).amax() <= P_REL_TOL * p_next.amax().max(1.0);
        k = k_next;
        p = p_next;
        if last_change < tol && p_settled {
            let k = gain_from(dynamics, r_aug, &p)?;
            return Ok((k, p));
        }
    }
    Err(RiccatiError::NoConvergence {
        iterations: max_iter,
        last_change,
    })
}

/// Materializes `C1..C4`. The only factorization in the pipeline happens here.
pub fn build_cache(
    dynamics: &LinearDynamics,
    kinf: DMatrix<f64>,
    pinf: DMatrix<f64>,
    r_aug: &DMatrix<f64>,
    rho: f64,
) -> Result<SolverCache, RiccatiError> {
    let m = dynamics.b.ncols();
    let s = r_aug + dynamics.b.transpose() * &pinf * &dynamics.b;
    let chol = s.cholesky().ok_or(RiccatiError::FactorizationFailure)?;
    let mut c1 = chol.solve(&DMatrix::identity(m, m));
    symmetrize(&mut c1);
    let c2 = (&dynamics.a - &dynamics.b * &kinf).transpose();
    let pc = &pinf * &dynamics.c;
    let c3 = dynamics.b.transpose() * &pc;
    let c4 = &c2 * &pc;
    Ok(SolverCache {
        rho,
        kinf,
        pinf,
        c1,
        c2,
        c3,
        c4,
    })
}

/// Largest elementwise violation of the algebraic Riccati equation.
pub fn dare_residual(
    dynamics: &LinearDynamics,
    q_aug: &DMatrix<f64>,
    r_aug: &DMatrix<f64>,
    kinf: &DMatrix<f64>,
    pinf: &DMatrix<f64>,
) -> f64 {
    let closed = &dynamics.a - &dynamics.b * kinf;
    let rhs = q_aug + kinf.transpose() * r_aug * kinf + closed.transpose() * pinf * &closed;
    (pinf - rhs).amax()
}
