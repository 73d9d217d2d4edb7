//! Online ADMM iteration over the cached infinite-horizon LQR solution.
//!
//! Each iteration runs, in order: linear cost update, backward pass, forward
//! rollout, slack projection and scaled dual ascent. Duals are stored scaled
//! (`y = λ / ρ`, `g = μ / ρ`) so nothing on this path divides; the only
//! division in an iteration is inside the cone projection.
//!
//! After [`Workspace::new`] no function in this module allocates.

use nalgebra::{DMatrix, DVector};

use crate::problem::{
    refs_to_linear_cost, ConstraintSet, LinearCost, ProblemDims, References, Settings,
    ValidatedProblem,
};
use crate::projection::project_slacks;
use crate::riccati::SolverCache;
use crate::stages::Stages;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationStatus {
    /// Both residuals were under tolerance at the last check.
    Solved,
    /// The iteration budget ran out.
    MaxIters,
    /// No solve has finished yet.
    Unsolved,
}

impl TerminationStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Solved => "solved",
            Self::MaxIters => "max_iters",
            Self::Unsolved => "unsolved",
        }
    }
}

impl std::fmt::Display for TerminationStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one [`solve`] call. Trajectories stay in the workspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSummary {
    pub status: TerminationStatus,
    pub iterations: usize,
    pub pri_res: f64,
    pub dua_res: f64,
}

/// Owned copy of a finished solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: TerminationStatus,
    pub iterations: usize,
    pub pri_res: f64,
    pub dua_res: f64,
    pub x_traj: Stages,
    pub u_traj: Stages,
}

/// All per-iteration state, sized once from the problem dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    dims: ProblemDims,
    pub x: Stages,
    pub u: Stages,
    pub z: Stages,
    pub w: Stages,
    pub y: Stages,
    pub g: Stages,
    pub p: Stages,
    pub d: Stages,
    pub q_tilde: Stages,
    pub r_tilde: Stages,
    pub z_prev: Stages,
    pub w_prev: Stages,
    /// Linear costs before the ADMM terms are added.
    pub linear: LinearCost,
    scratch: Vec<f64>,
    pub pri_res: f64,
    pub dua_res: f64,
    pub iter: usize,
    pub status: TerminationStatus,
}

impl Workspace {
    pub fn new(dims: ProblemDims) -> Self {
        let ProblemDims { n, m, horizon } = dims;
        let states = || Stages::zeros(n, horizon);
        let inputs = || Stages::zeros(m, horizon - 1);
        Self {
            dims,
            x: states(),
            u: inputs(),
            z: states(),
            w: inputs(),
            y: states(),
            g: inputs(),
            p: states(),
            d: inputs(),
            q_tilde: states(),
            r_tilde: inputs(),
            z_prev: states(),
            w_prev: inputs(),
            linear: LinearCost::zeros(dims),
            scratch: vec![0.0; m],
            pri_res: 0.0,
            dua_res: 0.0,
            iter: 0,
            status: TerminationStatus::Unsolved,
        }
    }

    pub fn dims(&self) -> ProblemDims {
        self.dims
    }

    /// Zeroes every iterate (a cold start). Linear costs are kept.
    pub fn reset(&mut self) {
        for s in [
            &mut self.x,
            &mut self.u,
            &mut self.z,
            &mut self.w,
            &mut self.y,
            &mut self.g,
            &mut self.p,
            &mut self.d,
            &mut self.q_tilde,
            &mut self.r_tilde,
            &mut self.z_prev,
            &mut self.w_prev,
        ] {
            s.fill(0.0);
        }
        self.scratch.fill(0.0);
        self.pri_res = 0.0;
        self.dua_res = 0.0;
        self.iter = 0;
        self.status = TerminationStatus::Unsolved;
    }

    /// Recomputes the linear costs from tracking references.
    pub fn set_references(
        &mut self,
        problem: &ValidatedProblem,
        cache: &SolverCache,
        refs: &References,
    ) {
        refs_to_linear_cost(problem, &cache.pinf, refs, &mut self.linear);
    }

    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            status: self.status,
            iterations: self.iter,
            pri_res: self.pri_res,
            dua_res: self.dua_res,
        }
    }

    pub fn report(&self) -> SolveReport {
        SolveReport {
            status: self.status,
            iterations: self.iter,
            pri_res: self.pri_res,
            dua_res: self.dua_res,
            x_traj: self.x.clone(),
            u_traj: self.u.clone(),
        }
    }
}

/// `out = M v`
#[inline]
fn mat_vec(out: &mut [f64], mat: &DMatrix<f64>, v: &[f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, vj) in v.iter().enumerate() {
            acc += mat[(i, j)] * vj;
        }
        *o = acc;
    }
}

/// Entry `i` of `Mᵀ v`.
#[inline]
fn mat_t_vec_entry(mat: &DMatrix<f64>, i: usize, v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (j, vj) in v.iter().enumerate() {
        acc += mat[(j, i)] * vj;
    }
    acc
}

/// Entry `i` of `M v`.
#[inline]
fn mat_vec_entry(mat: &DMatrix<f64>, i: usize, v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (j, vj) in v.iter().enumerate() {
        acc += mat[(i, j)] * vj;
    }
    acc
}

/// `q̃ = q + ρ(y - z)`, `r̃ = r + ρ(g - w)` on every stage.
pub fn update_linear_costs(ws: &mut Workspace, rho: f64) {
    let pairs = [
        (&mut ws.q_tilde, &ws.linear.q, &ws.y, &ws.z),
        (&mut ws.r_tilde, &ws.linear.r, &ws.g, &ws.w),
    ];
    for (out, base, dual, slack) in pairs {
        let out = out.as_mut_slice();
        let (base, dual, slack) = (base.as_slice(), dual.as_slice(), slack.as_slice());
        for i in 0..out.len() {
            out[i] = base[i] + rho * (dual[i] - slack[i]);
        }
    }
}

/// Cached Riccati backward pass:
/// `d[k] = C1 (Bᵀp[k+1] + r̃[k] + C3)`,
/// `p[k] = q̃[k] + C2 p[k+1] - Kᵀ r̃[k] + C4`, seeded with `p[N-1] = q̃[N-1]`.
pub fn backward_pass(ws: &mut Workspace, dynamics_b: &DMatrix<f64>, cache: &SolverCache) {
    let ProblemDims { n, m, horizon } = ws.dims;
    let last = horizon - 1;
    ws.p.stage_mut(last).copy_from_slice(ws.q_tilde.stage(last));
    for k in (0..last).rev() {
        let (p_k, p_next) = ws.p.stage_pair_mut(k, k + 1);
        let r_k = ws.r_tilde.stage(k);
        for j in 0..m {
            ws.scratch[j] = mat_t_vec_entry(dynamics_b, j, p_next) + r_k[j] + cache.c3[j];
        }
        mat_vec(ws.d.stage_mut(k), &cache.c1, &ws.scratch);
        let q_k = ws.q_tilde.stage(k);
        for i in 0..n {
            p_k[i] = q_k[i] + mat_vec_entry(&cache.c2, i, p_next)
                - mat_t_vec_entry(&cache.kinf, i, r_k)
                + cache.c4[i];
        }
    }
}

/// Rolls out `u[k] = -K x[k] - d[k]` through the affine dynamics from `x0`.
pub fn forward_pass(
    ws: &mut Workspace,
    cache: &SolverCache,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DVector<f64>,
    x0: &[f64],
) {
    let ProblemDims { n, m, horizon } = ws.dims;
    ws.x.stage_mut(0).copy_from_slice(x0);
    for k in 0..horizon - 1 {
        let (x_next, x_k) = ws.x.stage_pair_mut(k + 1, k);
        let u_k = ws.u.stage_mut(k);
        let d_k = ws.d.stage(k);
        for j in 0..m {
            u_k[j] = -mat_vec_entry(&cache.kinf, j, x_k) - d_k[j];
        }
        for i in 0..n {
            let mut acc = 0.0;
            for l in 0..n {
                acc += a[(i, l)] * x_k[l];
            }
            for j in 0..m {
                acc += b[(i, j)] * u_k[j];
            }
            x_next[i] = acc + c[i];
        }
    }
}

/// `z = Π(x + y)`, `w = Π(u + g)`, keeping the previous slacks for the dual
/// residual.
pub fn slack_update(ws: &mut Workspace, cons: &ConstraintSet, settings: &Settings) {
    ws.z_prev.copy_from(&ws.z);
    ws.w_prev.copy_from(&ws.w);

    let state_bounds = cons.state_bounds.as_ref().filter(|_| settings.en_state_bound);
    let input_bounds = cons.input_bounds.as_ref().filter(|_| settings.en_input_bound);
    let state_cones: &[_] = if settings.en_state_soc { &cons.state_cones } else { &[] };
    let input_cones: &[_] = if settings.en_input_soc { &cons.input_cones } else { &[] };

    for k in 0..ws.z.len() {
        let (z, x, y) = (ws.z.stage_mut(k), ws.x.stage(k), ws.y.stage(k));
        for i in 0..z.len() {
            z[i] = x[i] + y[i];
        }
        project_slacks(z, state_bounds, state_cones);
    }
    for k in 0..ws.w.len() {
        let (w, u, g) = (ws.w.stage_mut(k), ws.u.stage(k), ws.g.stage(k));
        for i in 0..w.len() {
            w[i] = u[i] + g[i];
        }
        project_slacks(w, input_bounds, input_cones);
    }
}

/// Scaled dual ascent `y ← y + x - z`, `g ← g + u - w`.
pub fn dual_update(ws: &mut Workspace) {
    let pairs = [(&mut ws.y, &ws.x, &ws.z), (&mut ws.g, &ws.u, &ws.w)];
    for (dual, primal, slack) in pairs {
        let dual = dual.as_mut_slice();
        let (primal, slack) = (primal.as_slice(), slack.as_slice());
        for i in 0..dual.len() {
            dual[i] = dual[i] + primal[i] - slack[i];
        }
    }
}

fn max_abs_diff(a: &Stages, b: &Stages) -> f64 {
    let mut out = 0.0_f64;
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        out = out.max((x - y).abs());
    }
    out
}

/// Infinity-norm primal residual and ρ-scaled slack change.
pub fn compute_residuals(ws: &Workspace, rho: f64) -> (f64, f64) {
    let pri = max_abs_diff(&ws.x, &ws.z).max(max_abs_diff(&ws.u, &ws.w));
    let dua = rho * max_abs_diff(&ws.z, &ws.z_prev).max(max_abs_diff(&ws.w, &ws.w_prev));
    (pri, dua)
}

/// Runs ADMM iterations from whatever the workspace currently holds.
///
/// The penalty is taken from `cache`, never from `settings.rho`, so a cache
/// can only be used with the penalty it was built for. On exit the workspace
/// keeps every iterate and the next call warm-starts from it.
pub fn solve(
    ws: &mut Workspace,
    problem: &ValidatedProblem,
    cache: &SolverCache,
    settings: &Settings,
    x0: &[f64],
) -> SolveSummary {
    let rho = cache.rho;
    let dynamics = problem.dynamics();
    let cons = problem.constraints();

    ws.status = TerminationStatus::MaxIters;
    ws.iter = 0;
    let mut checked_last = false;
    for it in 1..=settings.max_iter {
        update_linear_costs(ws, rho);
        backward_pass(ws, &dynamics.b, cache);
        forward_pass(ws, cache, &dynamics.a, &dynamics.b, &dynamics.c, x0);
        slack_update(ws, cons, settings);
        dual_update(ws);
        ws.iter = it;

        checked_last = settings.check_termination > 0 && it % settings.check_termination == 0;
        if checked_last {
            let (pri, dua) = compute_residuals(ws, rho);
            ws.pri_res = pri;
            ws.dua_res = dua;
            if pri < settings.abs_pri_tol && dua < settings.abs_dua_tol {
                ws.status = TerminationStatus::Solved;
                break;
            }
        }
    }
    if !checked_last {
        let (pri, dua) = compute_residuals(ws, rho);
        ws.pri_res = pri;
        ws.dua_res = dua;
    }
    ws.summary()
}

/// Moves every primal, slack and dual trajectory one stage earlier,
/// repeating the final stage.
pub fn warm_start_shift(ws: &mut Workspace) {
    for s in [
        &mut ws.x,
        &mut ws.u,
        &mut ws.z,
        &mut ws.w,
        &mut ws.y,
        &mut ws.g,
    ] {
        let dim = s.dim();
        let data = s.as_mut_slice();
        if data.len() > dim {
            data.copy_within(dim.., 0);
        }
    }
}

/// Problem, cache, settings and workspace kept consistent with each other.
/// Changing the penalty rebuilds the cache.
#[derive(Debug, Clone)]
pub struct Solver {
    problem: ValidatedProblem,
    settings: Settings,
    cache: SolverCache,
    pub workspace: Workspace,
}

#[derive(Debug, thiserror::Error)]
pub enum SetupError {
    #[error(transparent)]
    Validation(#[from] crate::problem::ValidationError),
    #[error(transparent)]
    Riccati(#[from] crate::riccati::RiccatiError),
}

impl Solver {
    pub fn new(problem: ValidatedProblem, settings: Settings) -> Result<Self, SetupError> {
        settings.validate()?;
        let cache = SolverCache::new(&problem, settings.rho)?;
        let workspace = Workspace::new(problem.dims());
        Ok(Self {
            problem,
            settings,
            cache,
            workspace,
        })
    }

    pub fn problem(&self) -> &ValidatedProblem {
        &self.problem
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn cache(&self) -> &SolverCache {
        &self.cache
    }

    pub fn set_settings(&mut self, settings: Settings) -> Result<(), SetupError> {
        settings.validate()?;
        if settings.rho != self.cache.rho {
            self.cache = SolverCache::new(&self.problem, settings.rho)?;
        }
        self.settings = settings;
        Ok(())
    }

    /// Iteration budget only; never touches the cache.
    pub fn set_max_iter(&mut self, max_iter: usize) {
        self.settings.max_iter = max_iter.max(1);
    }

    pub fn set_references(&mut self, refs: &References) -> Result<(), SetupError> {
        refs.check(self.problem.dims())?;
        self.workspace
            .set_references(&self.problem, &self.cache, refs);
        Ok(())
    }

    pub fn solve(&mut self, x0: &[f64]) -> SolveSummary {
        assert_eq!(x0.len(), self.problem.dims().n, "x0 has the wrong length");
        solve(
            &mut self.workspace,
            &self.problem,
            &self.cache,
            &self.settings,
            x0,
        )
    }
}
