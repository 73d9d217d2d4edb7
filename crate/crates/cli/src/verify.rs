//! Oracle checks run by `tinysocp verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tinysocp::format::ProblemFile;
use tinysocp::oracle::{grid_projection_oracle, kkt_solve, objective, reference_admm};
use tinysocp::projection::{project_slacks, project_soc};
use tinysocp::riccati::{augment_costs, dare_residual};
use tinysocp::solver::{backward_pass, forward_pass, update_linear_costs};
use tinysocp::{solve, LinearCost, Settings, SolverCache, TerminationStatus, Workspace};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check { name, passed, detail }
    }
}

pub const DARE_TOL: f64 = 1e-8;
pub const KKT_TOL: f64 = 1e-8;
pub const PROJECTION_SAMPLES: usize = 200;
pub const PROJECTION_RESOLUTION: usize = 400;
pub const REFERENCE_TOL: f64 = 1e-5;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Runs every check; a setup failure becomes a single failed check.
pub fn run_checks(file: &ProblemFile, seed: u64) -> Vec<Check> {
    let cache = match SolverCache::new(&file.problem, file.settings.rho) {
        Ok(c) => c,
        Err(e) => return vec![Check::new("riccati", false, e.to_string())],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        check_dare(file, &cache),
        check_kkt(file, &cache, &mut rng),
        check_projection(&mut rng),
        check_reference(file, &cache, &mut rng),
    ]
}

fn check_dare(file: &ProblemFile, cache: &SolverCache) -> Check {
    let (q_aug, r_aug) = augment_costs(file.problem.cost(), cache.rho);
    let res = dare_residual(file.problem.dynamics(), &q_aug, &r_aug, &cache.kinf, &cache.pinf);
    let scale = cache.pinf.amax().max(1.0);
    Check::new(
        "dare_residual",
        res <= DARE_TOL * scale,
        format!("residual {res:e} (limit {:e})", DARE_TOL * scale),
    )
}

/// One cached primal update from random duals and slacks against a direct
/// solve of the same equality-constrained QP.
fn check_kkt(file: &ProblemFile, cache: &SolverCache, rng: &mut ChaCha8Rng) -> Check {
    let p = &file.problem;
    let dims = p.dims();
    let dyn_ = p.dynamics();
    let mut worst = 0.0_f64;
    for _ in 0..5 {
        let mut ws = Workspace::new(dims);
        for s in [
            &mut ws.linear.q,
            &mut ws.linear.r,
            &mut ws.y,
            &mut ws.g,
            &mut ws.z,
            &mut ws.w,
        ] {
            s.as_mut_slice().iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        }
        let x0: Vec<f64> = (0..dims.n).map(|_| rng.random_range(-1.0..1.0)).collect();
        update_linear_costs(&mut ws, cache.rho);
        backward_pass(&mut ws, &dyn_.b, cache);
        forward_pass(&mut ws, cache, &dyn_.a, &dyn_.b, &dyn_.c, &x0);
        let (xk, uk) = match kkt_solve(p, cache.rho, &cache.pinf, &ws.q_tilde, &ws.r_tilde, &x0) {
            Ok(v) => v,
            Err(e) => return Check::new("kkt_agreement", false, e.to_string()),
        };
        let scale = xk.as_slice().iter().chain(uk.as_slice()).fold(1.0_f64, |a, v| a.max(v.abs()));
        worst = worst.max(ws.x.max_abs_diff(&xk).max(ws.u.max_abs_diff(&uk)) / scale);
    }
    Check::new(
        "kkt_agreement",
        worst <= KKT_TOL,
        format!("max relative deviation {worst:e} over 5 trials"),
    )
}

/// Closed-form cone projection against a sampled nearest point, plus
/// idempotence, in two and three dimensions.
fn check_projection(rng: &mut ChaCha8Rng) -> Check {
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_idem = 0.0_f64;
    for i in 0..PROJECTION_SAMPLES {
        let len = if i % 4 == 0 { 2 } else { 3 };
        let z: Vec<f64> = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut proj = z.clone();
        project_soc(&mut proj);
        let grid = grid_projection_oracle(&z, PROJECTION_RESOLUTION);
        worst_gap = worst_gap.max(dist(&z, &proj) - dist(&z, &grid));
        let mut again = proj.clone();
        project_soc(&mut again);
        worst_idem = worst_idem.max(dist(&again, &proj));
    }
    Check::new(
        "projection_oracle",
        worst_gap <= 1e-6 && worst_idem <= 1e-12,
        format!("worst distance excess {worst_gap:e}, idempotence {worst_idem:e}"),
    )
}

/// Library ADMM at tight tolerance against the dense reference ADMM.
fn check_reference(file: &ProblemFile, cache: &SolverCache, rng: &mut ChaCha8Rng) -> Check {
    let p = &file.problem;
    let cons = p.constraints();
    let mut x0: Vec<f64> = (0..p.dims().n).map(|_| rng.random_range(-0.1..0.1)).collect();
    project_slacks(&mut x0, cons.state_bounds.as_ref(), &cons.state_cones);

    let settings = Settings {
        abs_pri_tol: 1e-8,
        abs_dua_tol: 1e-8,
        max_iter: 200_000,
        check_termination: file.settings.check_termination.max(1),
        ..file.settings.clone()
    };
    let mut ws = Workspace::new(p.dims());
    let summary = solve(&mut ws, p, cache, &settings, &x0);
    let lin = LinearCost::zeros(p.dims());
    let reference = match reference_admm(p, cache.rho, &cache.pinf, &lin, &x0, 200_000, 1e-10) {
        Ok(r) => r,
        Err(e) => return Check::new("reference_admm", false, e.to_string()),
    };
    let obj = objective(p, cache.rho, &cache.pinf, &lin, &ws.x, &ws.u);
    let dev = ws.x.max_abs_diff(&reference.x).max(ws.u.max_abs_diff(&reference.u));
    let scale = reference.objective.abs().max(1.0);
    let gap = (obj - reference.objective).abs() / scale;
    let converged = summary.status == TerminationStatus::Solved;
    Check::new(
        "reference_admm",
        converged && dev <= REFERENCE_TOL * scale.sqrt() && gap <= REFERENCE_TOL,
        format!(
            "library {} in {} iterations; max deviation {dev:e}, relative objective gap {gap:e}",
            summary.status, summary.iterations
        ),
    )
}
