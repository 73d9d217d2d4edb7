#![allow(dead_code)]

use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tinysocp::{
    validate, Bounds, ConstraintSet, CostData, LinearDynamics, ProblemDefinition, ProblemDims,
    ValidatedProblem,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Random system with spectral radius around one and a dense input map,
/// which is stabilizable with probability one.
pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, m: usize, horizon: usize, drift: bool) -> ValidatedProblem {
    let raw = uniform(rng, n, n, 1.0);
    let norm = raw.norm() / (n as f64).sqrt();
    let a = DMatrix::identity(n, n) * 0.5 + raw * (0.6 / norm.max(1e-3));
    let b = uniform(rng, n, m, 1.0);
    let c = if drift {
        DVector::from_vec(uniform_vec(rng, n, 0.1))
    } else {
        DVector::zeros(n)
    };
    let lq = uniform(rng, n, n, 1.0);
    let lr = uniform(rng, m, m, 1.0);
    let q = &lq * lq.transpose() * 0.2 + DMatrix::identity(n, n) * 0.1;
    let r = &lr * lr.transpose() * 0.1 + DMatrix::identity(m, m) * 0.5;
    validate(&ProblemDefinition {
        dims: ProblemDims::new(n, m, horizon),
        dynamics: LinearDynamics { a, b, c },
        cost: CostData { q, r },
        constraints: ConstraintSet::default(),
    })
    .expect("random problem is valid")
}

pub fn double_integrator_def(horizon: usize) -> ProblemDefinition {
    let dt = 0.05;
    ProblemDefinition {
        dims: ProblemDims::new(2, 1, horizon),
        dynamics: LinearDynamics {
            a: dmatrix![1.0, dt; 0.0, 1.0],
            b: dmatrix![0.5 * dt * dt; dt],
            c: dvector![0.0, 0.0],
        },
        cost: CostData {
            q: DMatrix::identity(2, 2) * 10.0,
            r: dmatrix![1.0],
        },
        constraints: ConstraintSet::default(),
    }
}

pub fn boxed_double_integrator(horizon: usize, u_limit: f64) -> ValidatedProblem {
    let mut def = double_integrator_def(horizon);
    def.constraints.input_bounds = Some(Bounds::symmetric(&[u_limit]));
    validate(&def).unwrap()
}
