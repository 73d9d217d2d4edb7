use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tinysocp::projection::{box_violation, cone_violation};
use tinysocp::solver::warm_start_shift;
use tinysocp::{Bounds, ConeSlice, References, SetupError, Settings, Solver, TerminationStatus};

use crate::scenario::{step_dynamics, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopOptions {
    pub steps: usize,
    /// Iteration budget per control step; replaces `max_iter`.
    pub budget: usize,
    /// Keep (shifted) iterates between steps; otherwise cold start every step.
    pub warm_start: bool,
    /// Seed for the initial-state perturbation.
    pub seed: u64,
    /// Uniform perturbation half-width added to the initial state.
    pub perturbation: f64,
}

impl ClosedLoopOptions {
    pub fn new(steps: usize, budget: usize) -> Self {
        Self {
            steps,
            budget,
            warm_start: true,
            seed: 0,
            perturbation: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    /// State before the input is applied.
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub pri_res: f64,
    pub dua_res: f64,
    pub iterations: usize,
    pub solved: bool,
    pub input_violation: f64,
    /// Violation of the state the input leads to.
    pub state_violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClosedLoopMetrics {
    /// Sum over steps of box excess plus cone excess of applied inputs and
    /// resulting states.
    pub total_violation: f64,
    /// `‖final state − goal‖₂`.
    pub landing_error: f64,
    pub max_input_violation: f64,
    pub max_state_violation: f64,
    pub mean_iterations: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopRun {
    pub records: Vec<StepRecord>,
    pub final_state: Vec<f64>,
    pub metrics: ClosedLoopMetrics,
}

/// Positive-part violation of `z` against a box and a set of cones.
pub fn violation(z: &[f64], bounds: Option<&Bounds>, cones: &[ConeSlice]) -> f64 {
    let mut v = 0.0;
    if let Some(b) = bounds {
        v += box_violation(z, b.lower.as_slice(), b.upper.as_slice());
    }
    for c in cones {
        v += cone_violation(&z[c.range()]);
    }
    v
}

/// Simulates the MPC loop: solve from the current state with the step's
/// references, apply the first input to the model dynamics, repeat.
///
/// Violations are always measured against every constraint of the problem,
/// even those switched off in `settings`.
pub fn run_closed_loop(
    scenario: &dyn Scenario,
    settings: &Settings,
    opts: &ClosedLoopOptions,
) -> Result<ClosedLoopRun, SetupError> {
    let problem = scenario.problem();
    let dims = problem.dims();
    let cons = problem.constraints().clone();
    let mut solver = Solver::new(problem.clone(), settings.clone())?;
    solver.set_max_iter(opts.budget);

    let mut state = scenario.initial_state();
    if opts.perturbation > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for v in state.iter_mut() {
            *v += rng.random_range(-opts.perturbation..=opts.perturbation);
        }
    }
    if opts.steps == 0 {
        return Ok(ClosedLoopRun {
            records: Vec::new(),
            final_state: state,
            metrics: ClosedLoopMetrics::default(),
        });
    }

    let mut refs = References::zeros(dims);
    let mut records = Vec::with_capacity(opts.steps);
    let mut metrics = ClosedLoopMetrics::default();
    for step in 0..opts.steps {
        scenario.references(step, &state, &mut refs);
        solver.set_references(&refs)?;
        if !opts.warm_start {
            solver.workspace.reset();
        } else if step > 0 {
            warm_start_shift(&mut solver.workspace);
        }
        let summary = solver.solve(&state);
        let u = solver.workspace.u.stage(0).to_vec();
        let next = step_dynamics(problem, &state, &u);

        let input_violation = violation(&u, cons.input_bounds.as_ref(), &cons.input_cones);
        let state_violation = violation(&next, cons.state_bounds.as_ref(), &cons.state_cones);
        metrics.total_violation += input_violation + state_violation;
        metrics.max_input_violation = metrics.max_input_violation.max(input_violation);
        metrics.max_state_violation = metrics.max_state_violation.max(state_violation);
        metrics.mean_iterations += summary.iterations as f64;
        records.push(StepRecord {
            step,
            t: step as f64 * scenario.dt(),
            x: state,
            u,
            pri_res: summary.pri_res,
            dua_res: summary.dua_res,
            iterations: summary.iterations,
            solved: summary.status == TerminationStatus::Solved,
            input_violation,
            state_violation,
        });
        state = next;
    }
    metrics.mean_iterations /= opts.steps as f64;
    metrics.landing_error = state
        .iter()
        .zip(scenario.goal())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(ClosedLoopRun {
        records,
        final_state: state,
        metrics,
    })
}
