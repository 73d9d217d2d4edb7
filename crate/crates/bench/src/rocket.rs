use nalgebra::{DMatrix, DVector};
use tinysocp::{
    validate, Bounds, ConeSlice, ConstraintSet, CostData, LinearDynamics, ProblemDefinition,
    ProblemDims, References, Settings, ValidatedProblem,
};

use crate::scenario::{double_integrator_blocks, gravity_drift, Scenario};

/// Point-mass powered descent. The input is the mass-normalized thrust
/// with its vertical component scaled by `tan(max_tilt)`, so the thrust
/// cone is the standard second-order cone over all three inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RocketConfig {
    pub horizon: usize,
    pub dt: f64,
    pub gravity: f64,
    /// Largest angle between thrust and vertical, degrees.
    pub max_tilt_deg: f64,
    pub start: [f64; 6],
    /// Steps of the straight-line descent reference before it holds at the goal.
    pub descent_steps: usize,
    pub steps: usize,
    pub position_weight: f64,
    pub velocity_weight: f64,
    pub input_weight: f64,
    /// Adds the 45° glide-slope cone on position (apex = altitude).
    pub position_cone: bool,
}

impl Default for RocketConfig {
    fn default() -> Self {
        Self {
            horizon: 16,
            dt: 0.05,
            gravity: 9.81,
            max_tilt_deg: 25.0,
            start: [20.0, -10.0, 20.0, 4.0, 2.0, -3.0],
            descent_steps: 120,
            steps: 140,
            position_weight: 10.0,
            velocity_weight: 1.0,
            input_weight: 0.1,
            position_cone: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RocketLanding {
    pub config: RocketConfig,
    problem: ValidatedProblem,
    tilt_scale: f64,
}

impl RocketLanding {
    pub fn new(config: RocketConfig) -> Self {
        let tilt_scale = config.max_tilt_deg.to_radians().tan();
        let (a, mut b) = double_integrator_blocks(3, config.dt);
        for i in 0..6 {
            b[(i, 2)] /= tilt_scale;
        }
        let q = DMatrix::from_diagonal(&DVector::from_fn(6, |i, _| {
            if i < 3 {
                config.position_weight
            } else {
                config.velocity_weight
            }
        }));
        let mut r = DMatrix::identity(3, 3) * config.input_weight;
        r[(2, 2)] /= tilt_scale * tilt_scale;

        let inf = f64::INFINITY;
        let mut constraints = ConstraintSet {
            input_cones: vec![ConeSlice::new(0, 3)],
            ..Default::default()
        };
        if config.position_cone {
            // the cone keeps altitude nonnegative on its own
            constraints.state_cones = vec![ConeSlice::new(0, 3)];
        } else {
            constraints.state_bounds = Some(Bounds::new(
                DVector::from_row_slice(&[-inf, -inf, 0.0, -inf, -inf, -inf]),
                DVector::from_element(6, inf),
            ));
        }
        let problem = validate(&ProblemDefinition {
            dims: ProblemDims::new(6, 3, config.horizon),
            dynamics: LinearDynamics {
                a,
                b,
                c: gravity_drift(config.dt, config.gravity),
            },
            cost: CostData { q, r },
            constraints,
        })
        .expect("rocket configuration is valid");
        Self {
            config,
            problem,
            tilt_scale,
        }
    }

    /// Physical mass-normalized thrust from a solver input.
    pub fn thrust(&self, input: &[f64]) -> [f64; 3] {
        [input[0], input[1], input[2] / self.tilt_scale]
    }

    /// Hover input in solver coordinates.
    pub fn hover_input(&self) -> [f64; 3] {
        [0.0, 0.0, self.config.gravity * self.tilt_scale]
    }

    /// Straight-line descent from the start to the goal at constant speed,
    /// then rest at the goal.
    pub fn reference_state(&self, step: usize) -> [f64; 6] {
        let s = &self.config.start;
        let total = self.config.descent_steps.max(1) as f64;
        if step >= self.config.descent_steps {
            return [0.0; 6];
        }
        let frac = 1.0 - step as f64 / total;
        let duration = total * self.config.dt;
        [
            s[0] * frac,
            s[1] * frac,
            s[2] * frac,
            -s[0] / duration,
            -s[1] / duration,
            -s[2] / duration,
        ]
    }
}

impl Scenario for RocketLanding {
    fn name(&self) -> &str {
        "rocket"
    }

    fn problem(&self) -> &ValidatedProblem {
        &self.problem
    }

    fn dt(&self) -> f64 {
        self.config.dt
    }

    fn initial_state(&self) -> Vec<f64> {
        self.config.start.to_vec()
    }

    fn goal(&self) -> Vec<f64> {
        vec![0.0; 6]
    }

    fn default_steps(&self) -> usize {
        self.config.steps
    }

    fn default_settings(&self) -> Settings {
        Settings {
            rho: 20.0,
            abs_pri_tol: 0.01,
            abs_dua_tol: 0.01,
            max_iter: 444,
            ..Settings::default()
        }
    }

    fn references(&self, step: usize, _state: &[f64], refs: &mut References) {
        for k in 0..self.config.horizon {
            refs.x_ref
                .stage_mut(k)
                .copy_from_slice(&self.reference_state(step + k));
        }
        let hover = self.hover_input();
        for k in 0..self.config.horizon - 1 {
            refs.u_ref.stage_mut(k).copy_from_slice(&hover);
        }
    }
}
