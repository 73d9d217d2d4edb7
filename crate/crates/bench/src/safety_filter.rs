use nalgebra::{DMatrix, DVector};
use tinysocp::{
    validate, Bounds, ConstraintSet, CostData, LinearDynamics, ProblemDefinition, ProblemDims,
    References, Settings, ValidatedProblem,
};

use crate::scenario::{double_integrator_blocks, step_dynamics, Scenario};

/// Stacked double integrators whose MPC stays close to a nominal
/// proportional-derivative policy while enforcing position and input boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyFilterConfig {
    pub axes: usize,
    pub dt: f64,
    pub horizon: usize,
    pub position_limit: f64,
    pub input_limit: f64,
    /// Amplitude of the sinusoid the nominal policy tracks.
    pub amplitude: f64,
    /// Angular frequency of the sinusoid, rad/s.
    pub frequency: f64,
    pub kp: f64,
    pub kd: f64,
    pub position_weight: f64,
    pub velocity_weight: f64,
    pub input_weight: f64,
    pub steps: usize,
}

impl Default for SafetyFilterConfig {
    fn default() -> Self {
        Self {
            axes: 1,
            dt: 0.02,
            horizon: 20,
            position_limit: 0.6,
            input_limit: 10.0,
            amplitude: 1.2,
            frequency: 2.0,
            kp: 10.0,
            kd: 5.0,
            position_weight: 10.0,
            velocity_weight: 1.0,
            input_weight: 1.0,
            steps: 400,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SafetyFilter {
    pub config: SafetyFilterConfig,
    problem: ValidatedProblem,
}

impl SafetyFilter {
    /// # Panics
    /// If `config.axes == 0` or the weights are not positive.
    pub fn new(config: SafetyFilterConfig) -> Self {
        assert!(config.axes >= 1, "at least one axis");
        let a = config.axes;
        let (am, bm) = double_integrator_blocks(a, config.dt);
        let mut q = DMatrix::zeros(2 * a, 2 * a);
        for i in 0..a {
            q[(i, i)] = config.position_weight;
            q[(a + i, a + i)] = config.velocity_weight;
        }
        let mut lim = vec![f64::INFINITY; 2 * a];
        lim[..a].fill(config.position_limit);
        let problem = validate(&ProblemDefinition {
            dims: ProblemDims::new(2 * a, a, config.horizon),
            dynamics: LinearDynamics {
                a: am,
                b: bm,
                c: DVector::zeros(2 * a),
            },
            cost: CostData {
                q,
                r: DMatrix::identity(a, a) * config.input_weight,
            },
            constraints: ConstraintSet {
                state_bounds: Some(Bounds::symmetric(&lim)),
                input_bounds: Some(Bounds::symmetric(&vec![config.input_limit; a])),
                ..Default::default()
            },
        })
        .expect("safety filter configuration is valid");
        Self { config, problem }
    }

    /// Target position, velocity and acceleration on `axis` at time `t`.
    fn target(&self, axis: usize, t: f64) -> (f64, f64, f64) {
        let c = &self.config;
        // axes are staggered in phase
        let phase = axis as f64 * 0.7;
        let arg = c.frequency * t + phase;
        let (s, co) = arg.sin_cos();
        (
            c.amplitude * s,
            c.amplitude * c.frequency * co,
            -c.amplitude * c.frequency * c.frequency * s,
        )
    }

    /// The unfiltered task policy.
    pub fn nominal_input(&self, t: f64, state: &[f64], out: &mut [f64]) {
        let a = self.config.axes;
        for i in 0..a {
            let (p, v, acc) = self.target(i, t);
            out[i] = self.config.kp * (p - state[i]) + self.config.kd * (v - state[a + i]) + acc;
        }
    }

    /// Positions visited by the nominal policy alone.
    pub fn run_nominal(&self, steps: usize) -> Vec<Vec<f64>> {
        let mut x = self.initial_state();
        let mut u = vec![0.0; self.config.axes];
        let mut out = vec![x.clone()];
        for k in 0..steps {
            self.nominal_input(k as f64 * self.config.dt, &x, &mut u);
            x = step_dynamics(&self.problem, &x, &u);
            out.push(x.clone());
        }
        out
    }
}

impl Scenario for SafetyFilter {
    fn name(&self) -> &str {
        "safety-filter"
    }

    fn problem(&self) -> &ValidatedProblem {
        &self.problem
    }

    fn dt(&self) -> f64 {
        self.config.dt
    }

    fn initial_state(&self) -> Vec<f64> {
        vec![0.0; 2 * self.config.axes]
    }

    fn goal(&self) -> Vec<f64> {
        vec![0.0; 2 * self.config.axes]
    }

    fn default_steps(&self) -> usize {
        self.config.steps
    }

    fn default_settings(&self) -> Settings {
        Settings {
            rho: 30.0,
            abs_pri_tol: 1e-3,
            abs_dua_tol: 1e-3,
            max_iter: 5000,
            ..Settings::default()
        }
    }

    /// Nominal inputs come from rolling the task policy forward from
    /// `state`; the state reference is the box center.
    fn references(&self, step: usize, state: &[f64], refs: &mut References) {
        let horizon = self.config.horizon;
        let t0 = step as f64 * self.config.dt;
        let mut x = state.to_vec();
        let mut u = vec![0.0; self.config.axes];
        refs.x_ref.as_mut_slice().fill(0.0);
        for k in 0..horizon - 1 {
            self.nominal_input(t0 + k as f64 * self.config.dt, &x, &mut u);
            refs.u_ref.stage_mut(k).copy_from_slice(&u);
            x = step_dynamics(&self.problem, &x, &u);
        }
    }
}
