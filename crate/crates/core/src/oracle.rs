//! Slow, independent reference computations used to check the solver:
//! a dense KKT solve of the primal subproblem, an uncached ADMM that
//! re-runs the full time-varying Riccati recursion every iteration, a
//! brute-force cone projection and the explicit (uncached) Riccati linear
//! recursion. Nothing here is on the solve path and everything may allocate.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::problem::{LinearCost, ValidatedProblem};
use crate::stages::Stages;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("KKT matrix is singular")]
    SingularKkt,
    #[error("stage matrix R + BᵀPB is singular")]
    SingularStage,
}

fn augmented(m: &DMatrix<f64>, rho: f64) -> DMatrix<f64> {
    m + DMatrix::identity(m.nrows(), m.ncols()) * rho
}

/// Solves the equality-constrained QP of one primal update directly:
///
/// minimize `Σ_{k<N-1} ½xᵀQ̃x + q̃ᵀx + ½uᵀR̃u + r̃ᵀu + ½x_Nᵀ P x_N + q̃_Nᵀx_N`
/// subject to `x_0 = x0` and `x_{k+1} = A x_k + B u_k + c`,
///
/// by assembling the full KKT matrix and LU-factorizing it.
pub fn kkt_solve(
    problem: &ValidatedProblem,
    rho: f64,
    terminal: &DMatrix<f64>,
    q_tilde: &Stages,
    r_tilde: &Stages,
    x0: &[f64],
) -> Result<(Stages, Stages), OracleError> {
    let dims = problem.dims();
    let (n, m, big_n) = (dims.n, dims.m, dims.horizon);
    let dynamics = problem.dynamics();
    let q_aug = augmented(&problem.cost().q, rho);
    let r_aug = augmented(&problem.cost().r, rho);

    let nx = big_n * n;
    let nv = nx + (big_n - 1) * m;
    let nc = big_n * n;
    let xi = |k: usize| k * n;
    let ui = |k: usize| nx + k * m;

    let mut kkt = DMatrix::zeros(nv + nc, nv + nc);
    let mut rhs = DVector::zeros(nv + nc);

    for k in 0..big_n {
        let w = if k + 1 == big_n { terminal } else { &q_aug };
        kkt.view_mut((xi(k), xi(k)), (n, n)).copy_from(w);
        for i in 0..n {
            rhs[xi(k) + i] = -q_tilde.stage(k)[i];
        }
    }
    for k in 0..big_n - 1 {
        kkt.view_mut((ui(k), ui(k)), (m, m)).copy_from(&r_aug);
        for i in 0..m {
            rhs[ui(k) + i] = -r_tilde.stage(k)[i];
        }
    }

    // constraint rows: E v = e
    let mut e = DMatrix::zeros(nc, nv);
    e.view_mut((0, xi(0)), (n, n)).fill_with_identity();
    for i in 0..n {
        rhs[nv + i] = x0[i];
    }
    for k in 0..big_n - 1 {
        let row = (k + 1) * n;
        e.view_mut((row, xi(k + 1)), (n, n)).fill_with_identity();
        e.view_mut((row, xi(k)), (n, n)).copy_from(&(-&dynamics.a));
        e.view_mut((row, ui(k)), (n, m)).copy_from(&(-&dynamics.b));
        for i in 0..n {
            rhs[nv + row + i] = dynamics.c[i];
        }
    }
    kkt.view_mut((nv, 0), (nc, nv)).copy_from(&e);
    kkt.view_mut((0, nv), (nv, nc)).copy_from(&e.transpose());

    let sol = kkt.lu().solve(&rhs).ok_or(OracleError::SingularKkt)?;
    if !sol.iter().all(|v| v.is_finite()) {
        return Err(OracleError::SingularKkt);
    }
    let mut xs = Stages::zeros(n, big_n);
    let mut us = Stages::zeros(m, big_n - 1);
    for k in 0..big_n {
        xs.stage_mut(k).copy_from_slice(&sol.as_slice()[xi(k)..xi(k) + n]);
    }
    for k in 0..big_n - 1 {
        us.stage_mut(k).copy_from_slice(&sol.as_slice()[ui(k)..ui(k) + m]);
    }
    Ok((xs, us))
}

/// The uncached linear-term recursion
///
/// `d_k = (R̃ + BᵀPB)⁻¹ (Bᵀp_{k+1} + r̃_k + BᵀPc)`
/// `p_k = q̃_k + (A - BK)ᵀ (p_{k+1} - PBd_k + Pc) + Kᵀ(R̃d_k - r̃_k)`
///
/// evaluated with `P`, `K` held at the given values. Returns `(p, d)`.
pub fn riccati_linear_terms(
    problem: &ValidatedProblem,
    rho: f64,
    kinf: &DMatrix<f64>,
    pinf: &DMatrix<f64>,
    q_tilde: &Stages,
    r_tilde: &Stages,
) -> Result<(Stages, Stages), OracleError> {
    let dims = problem.dims();
    let dynamics = problem.dynamics();
    let (a, b, c) = (&dynamics.a, &dynamics.b, &dynamics.c);
    let r_aug = augmented(&problem.cost().r, rho);
    let s_inv = (&r_aug + b.transpose() * pinf * b)
        .try_inverse()
        .ok_or(OracleError::SingularStage)?;
    let closed_t = (a - b * kinf).transpose();

    let mut p = Stages::zeros(dims.n, dims.horizon);
    let mut d = Stages::zeros(dims.m, dims.horizon - 1);
    let last = dims.horizon - 1;
    p.stage_mut(last).copy_from_slice(q_tilde.stage(last));
    for k in (0..last).rev() {
        let p_next = p.stage_vector(k + 1);
        let r_k = r_tilde.stage_vector(k);
        let d_k = &s_inv * (b.transpose() * &p_next + &r_k + b.transpose() * pinf * c);
        let p_k = q_tilde.stage_vector(k)
            + &closed_t * (&p_next - pinf * b * &d_k + pinf * c)
            + kinf.transpose() * (&r_aug * &d_k - &r_k);
        d.stage_mut(k).copy_from_slice(d_k.as_slice());
        p.stage_mut(k).copy_from_slice(p_k.as_slice());
    }
    Ok((p, d))
}

/// Objective of the constrained problem that ADMM converges to when the
/// primal subproblem uses augmented terminal weight `terminal`: the terminal
/// quadratic is `terminal - ρI`.
pub fn objective(
    problem: &ValidatedProblem,
    rho: f64,
    terminal: &DMatrix<f64>,
    lin: &LinearCost,
    x: &Stages,
    u: &Stages,
) -> f64 {
    let cost = problem.cost();
    let last = problem.dims().horizon - 1;
    let quad = |m: &DMatrix<f64>, v: &DVector<f64>| 0.5 * v.dot(&(m * v));
    let mut j = 0.0;
    for k in 0..last {
        let xk = x.stage_vector(k);
        let uk = u.stage_vector(k);
        j += quad(&cost.q, &xk) + lin.q.stage_vector(k).dot(&xk);
        j += quad(&cost.r, &uk) + lin.r.stage_vector(k).dot(&uk);
    }
    let xn = x.stage_vector(last);
    let q_n = terminal - DMatrix::identity(xn.len(), xn.len()) * rho;
    j + quad(&q_n, &xn) + lin.q.stage_vector(last).dot(&xn)
}

fn project_cone_ref(v: &mut DVector<f64>) {
    let last = v.len() - 1;
    let a = v[last];
    let head_norm = v.rows(0, last).norm();
    if head_norm <= a {
        return;
    }
    if head_norm <= -a {
        v.fill(0.0);
        return;
    }
    let alpha = (head_norm + a) / (2.0 * head_norm);
    v.rows_mut(0, last).scale_mut(alpha);
    v[last] = alpha * head_norm;
}

fn project_stage_ref(
    v: &mut DVector<f64>,
    bounds: Option<&crate::problem::Bounds>,
    cones: &[crate::problem::ConeSlice],
) {
    if let Some(b) = bounds {
        for i in 0..v.len() {
            v[i] = v[i].clamp(b.lower[i], b.upper[i]);
        }
    }
    for cone in cones {
        let mut part = DVector::from_column_slice(&v.as_slice()[cone.range()]);
        project_cone_ref(&mut part);
        v.rows_mut(cone.start, cone.len).copy_from(&part);
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub x: Stages,
    pub u: Stages,
    pub z: Stages,
    pub w: Stages,
    pub objective: f64,
    pub iterations: usize,
    pub pri_res: f64,
    pub dua_res: f64,
}

/// Plain ADMM with unscaled multipliers and a fresh time-varying Riccati
/// recursion (`P_N = terminal`) on every iteration. Runs until both
/// infinity-norm residuals drop below `tol` or `max_iter` is reached.
#[allow(clippy::too_many_arguments)]
pub fn reference_admm(
    problem: &ValidatedProblem,
    rho: f64,
    terminal: &DMatrix<f64>,
    lin: &LinearCost,
    x0: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<ReferenceSolution, OracleError> {
    let dims = problem.dims();
    let (n, m, big_n) = (dims.n, dims.m, dims.horizon);
    let dynamics = problem.dynamics();
    let (a, b, c) = (&dynamics.a, &dynamics.b, &dynamics.c);
    let cons = problem.constraints();
    let q_aug = augmented(&problem.cost().q, rho);
    let r_aug = augmented(&problem.cost().r, rho);

    let zeros_x = || vec![DVector::<f64>::zeros(n); big_n];
    let zeros_u = || vec![DVector::<f64>::zeros(m); big_n - 1];
    let (mut x, mut z, mut lam) = (zeros_x(), zeros_x(), zeros_x());
    let (mut u, mut w, mut mu) = (zeros_u(), zeros_u(), zeros_u());
    let mut gains = vec![DMatrix::<f64>::zeros(m, n); big_n - 1];
    let mut ff = zeros_u();
    let (mut pri, mut dua) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;

    for it in 1..=max_iter {
        iterations = it;
        // backward
        let mut p_mat = terminal.clone();
        let mut p_vec = &lin.q.stage_vector(big_n - 1) + &lam[big_n - 1] - &z[big_n - 1] * rho;
        for k in (0..big_n - 1).rev() {
            let q_t = &lin.q.stage_vector(k) + &lam[k] - &z[k] * rho;
            let r_t = &lin.r.stage_vector(k) + &mu[k] - &w[k] * rho;
            let s_inv = (&r_aug + b.transpose() * &p_mat * b)
                .try_inverse()
                .ok_or(OracleError::SingularStage)?;
            let k_k = &s_inv * b.transpose() * &p_mat * a;
            let d_k = &s_inv * (b.transpose() * &p_vec + &r_t + b.transpose() * &p_mat * c);
            let closed = a - b * &k_k;
            let p_vec_next = &q_t
                + closed.transpose() * (&p_vec - &p_mat * b * &d_k + &p_mat * c)
                + k_k.transpose() * (&r_aug * &d_k - &r_t);
            let p_mat_next =
                &q_aug + k_k.transpose() * &r_aug * &k_k + closed.transpose() * &p_mat * &closed;
            gains[k] = k_k;
            ff[k] = d_k;
            p_vec = p_vec_next;
            p_mat = p_mat_next;
        }
        // forward
        x[0] = DVector::from_column_slice(x0);
        for k in 0..big_n - 1 {
            u[k] = -(&gains[k] * &x[k]) - &ff[k];
            x[k + 1] = a * &x[k] + b * &u[k] + c;
        }
        // slacks
        let (z_old, w_old) = (z.clone(), w.clone());
        for k in 0..big_n {
            let mut v = &x[k] + &lam[k] / rho;
            project_stage_ref(&mut v, cons.state_bounds.as_ref(), &cons.state_cones);
            z[k] = v;
        }
        for k in 0..big_n - 1 {
            let mut v = &u[k] + &mu[k] / rho;
            project_stage_ref(&mut v, cons.input_bounds.as_ref(), &cons.input_cones);
            w[k] = v;
        }
        // duals
        for k in 0..big_n {
            lam[k] += (&x[k] - &z[k]) * rho;
        }
        for k in 0..big_n - 1 {
            mu[k] += (&u[k] - &w[k]) * rho;
        }
        let amax = |a: &[DVector<f64>], b: &[DVector<f64>]| {
            a.iter()
                .zip(b)
                .map(|(p, q)| (p - q).amax())
                .fold(0.0_f64, f64::max)
        };
        pri = amax(&x, &z).max(amax(&u, &w));
        dua = rho * amax(&z, &z_old).max(amax(&w, &w_old));
        if pri < tol && dua < tol {
            break;
        }
    }

    let pack = |vs: &[DVector<f64>], dim: usize| {
        let mut s = Stages::zeros(dim, vs.len());
        for (k, v) in vs.iter().enumerate() {
            s.stage_mut(k).copy_from_slice(v.as_slice());
        }
        s
    };
    let (xs, us) = (pack(&x, n), pack(&u, m));
    let objective = objective(problem, rho, terminal, lin, &xs, &us);
    Ok(ReferenceSolution {
        x: xs,
        u: us,
        z: pack(&z, n),
        w: pack(&w, m),
        objective,
        iterations,
        pri_res: pri,
        dua_res: dua,
    })
}

/// Brute-force nearest point on a sampled second-order cone in 2 or 3
/// dimensions (last coordinate is the apex).
///
/// Points already in the cone are returned as-is. Otherwise the nearest
/// point of a closed convex set lies on its boundary, so only the boundary
/// surface is sampled: `resolution` levels along the generator (out to
/// `‖z‖`, which bounds the projection's norm) times `resolution` angles in 3-D,
/// or both boundary rays in 2-D.
pub fn grid_projection_oracle(z: &[f64], resolution: usize) -> Vec<f64> {
    assert!(z.len() == 2 || z.len() == 3, "grid oracle supports 2-D and 3-D cones");
    assert!(resolution >= 2);
    let apex = z[z.len() - 1];
    let head = z[..z.len() - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
    if head <= apex {
        return z.to_vec();
    }
    let extent = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut best = vec![0.0; z.len()];
    let mut best_d2 = z.iter().map(|v| v * v).sum::<f64>();
    let mut consider = |p: &[f64]| {
        let d2: f64 = p.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 < best_d2 {
            best_d2 = d2;
            best.copy_from_slice(p);
        }
    };
    for i in 0..resolution {
        let t = extent * i as f64 / (resolution - 1) as f64;
        if z.len() == 2 {
            consider(&[t, t]);
            consider(&[-t, t]);
        } else {
            for j in 0..resolution {
                let theta = std::f64::consts::TAU * j as f64 / resolution as f64;
                consider(&[t * theta.cos(), t * theta.sin(), t]);
            }
        }
    }
    best
}

/// Largest distance between a true boundary point and its nearest sample
/// in [`grid_projection_oracle`] for a query `z`.
pub fn grid_spacing(z: &[f64], resolution: usize) -> f64 {
    let extent = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    let radial = std::f64::consts::SQRT_2 * extent / (resolution - 1) as f64;
    let angular = extent * std::f64::consts::TAU / resolution as f64;
    radial + angular
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::tests::double_integrator;
    use crate::problem::validate;

    #[test]
    fn grid_interior_point_is_itself() {
        assert_eq!(grid_projection_oracle(&[0.3, 0.4, 1.0], 400), vec![0.3, 0.4, 1.0]);
    }

    #[test]
    fn grid_exterior_point_near_formula_value() {
        let z = [3.0, 4.0, 0.0];
        let p = grid_projection_oracle(&z, 400);
        let err = p
            .iter()
            .zip([1.5, 2.0, 2.5])
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= grid_spacing(&z, 400), "{p:?}");
    }

    #[test]
    fn grid_polar_point_goes_to_origin() {
        let z = [0.1, -0.2, -5.0];
        let p = grid_projection_oracle(&z, 400);
        assert!(p.iter().all(|v| v.abs() <= grid_spacing(&z, 400)));
        let p = grid_projection_oracle(&[0.5, -3.0], 400);
        assert_eq!(p, vec![0.0, 0.0]);
    }

    #[test]
    fn kkt_zero_data_gives_zero_solution() {
        let v = validate(&double_integrator(5)).unwrap();
        let (x, u) = kkt_solve(
            &v,
            1.0,
            &DMatrix::identity(2, 2),
            &Stages::zeros(2, 5),
            &Stages::zeros(1, 4),
            &[0.0, 0.0],
        )
        .unwrap();
        assert!(x.as_slice().iter().all(|v| *v == 0.0));
        assert!(u.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn kkt_two_stage_scalar_matches_hand_elimination() {
        // x1 = a x0 + b u0 + c, minimize ½R̃u0² + r u0 + ½P x1² + q x1.
        // Substituting: (R̃ + P b²) u0 = -(r + b q + P b (a x0 + c)).
        use crate::problem::*;
        use nalgebra::{dmatrix, dvector};
        let (a, b, c) = (0.9, 0.5, 0.2);
        let def = ProblemDefinition {
            dims: ProblemDims::new(1, 1, 2),
            dynamics: LinearDynamics {
                a: dmatrix![a],
                b: dmatrix![b],
                c: dvector![c],
            },
            cost: CostData {
                q: dmatrix![1.0],
                r: dmatrix![2.0],
            },
            constraints: ConstraintSet::default(),
        };
        let v = validate(&def).unwrap();
        let (rho, p, q1, r0, x0) = (0.5, 3.0, -1.0, 0.25, 2.0);
        let (x, u) = kkt_solve(
            &v,
            rho,
            &dmatrix![p],
            &Stages::from_rows(&[vec![7.0], vec![q1]]).unwrap(),
            &Stages::from_rows(&[vec![r0]]).unwrap(),
            &[x0],
        )
        .unwrap();
        let r_t = 2.0 + rho;
        let u0 = -(r0 + b * q1 + p * b * (a * x0 + c)) / (r_t + p * b * b);
        assert!((u.stage(0)[0] - u0).abs() < 1e-12);
        assert!((x.stage(1)[0] - (a * x0 + b * u0 + c)).abs() < 1e-12);
        assert!((x.stage(0)[0] - x0).abs() < 1e-12);
    }
}
