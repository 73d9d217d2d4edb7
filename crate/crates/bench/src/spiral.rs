use nalgebra::{DMatrix, DVector};
use tinysocp::{
    validate, ConeSlice, ConstraintSet, CostData, LinearDynamics, ProblemDefinition, ProblemDims,
    References, Settings, ValidatedProblem,
};

use crate::scenario::{double_integrator_blocks, gravity_drift, Scenario};

/// Descending helix tracked by a point mass whose position must stay in the
/// 45° cone `‖(x, y)‖ ≤ altitude`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiralConfig {
    pub horizon: usize,
    pub dt: f64,
    pub gravity: f64,
    /// Helix radius; constant, so the reference leaves the cone near the ground.
    pub radius: f64,
    pub start_altitude: f64,
    /// Angular rate around the vertical axis, rad/s.
    pub angular_rate: f64,
    pub descent_steps: usize,
    pub steps: usize,
    pub position_weight: f64,
    pub velocity_weight: f64,
    pub input_weight: f64,
}

impl Default for SpiralConfig {
    fn default() -> Self {
        Self {
            horizon: 25,
            dt: 0.02,
            gravity: 9.81,
            radius: 1.0,
            start_altitude: 2.0,
            angular_rate: 1.5,
            descent_steps: 250,
            steps: 300,
            position_weight: 1.0,
            velocity_weight: 0.1,
            input_weight: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpiralLanding {
    pub config: SpiralConfig,
    problem: ValidatedProblem,
}

impl SpiralLanding {
    pub fn new(config: SpiralConfig) -> Self {
        let (a, b) = double_integrator_blocks(3, config.dt);
        let q = DMatrix::from_diagonal(&DVector::from_fn(6, |i, _| {
            if i < 3 {
                config.position_weight
            } else {
                config.velocity_weight
            }
        }));
        let problem = validate(&ProblemDefinition {
            dims: ProblemDims::new(6, 3, config.horizon),
            dynamics: LinearDynamics {
                a,
                b,
                c: gravity_drift(config.dt, config.gravity),
            },
            cost: CostData {
                q,
                r: DMatrix::identity(3, 3) * config.input_weight,
            },
            constraints: ConstraintSet {
                state_cones: vec![ConeSlice::new(0, 3)],
                ..Default::default()
            },
        })
        .expect("spiral configuration is valid");
        Self { config, problem }
    }

    /// Helix point and velocity at control step `step`; the goal once the
    /// descent is over.
    pub fn reference_state(&self, step: usize) -> [f64; 6] {
        let c = &self.config;
        if step >= c.descent_steps {
            return [0.0; 6];
        }
        let t = step as f64 * c.dt;
        let (s, co) = (c.angular_rate * t).sin_cos();
        let duration = c.descent_steps as f64 * c.dt;
        let (z, vz) = (c.start_altitude * (1.0 - t / duration), -c.start_altitude / duration);
        [
            c.radius * co,
            c.radius * s,
            z,
            -c.radius * c.angular_rate * s,
            c.radius * c.angular_rate * co,
            vz,
        ]
    }
}

impl Scenario for SpiralLanding {
    fn name(&self) -> &str {
        "spiral"
    }

    fn problem(&self) -> &ValidatedProblem {
        &self.problem
    }

    fn dt(&self) -> f64 {
        self.config.dt
    }

    fn initial_state(&self) -> Vec<f64> {
        self.reference_state(0).to_vec()
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
            abs_pri_tol: 1e-3,
            abs_dua_tol: 1e-3,
            max_iter: 5000,
            ..Settings::default()
        }
    }

    fn references(&self, step: usize, _state: &[f64], refs: &mut References) {
        for k in 0..self.config.horizon {
            refs.x_ref
                .stage_mut(k)
                .copy_from_slice(&self.reference_state(step + k));
        }
        let hover = [0.0, 0.0, self.config.gravity];
        for k in 0..self.config.horizon - 1 {
            refs.u_ref.stage_mut(k).copy_from_slice(&hover);
        }
    }
}
