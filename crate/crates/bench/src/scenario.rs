use nalgebra::{DMatrix, DVector};
use tinysocp::{References, Settings, ValidatedProblem};

/// A closed-loop benchmark: a fixed MPC problem plus the references it
/// tracks at every control step.
pub trait Scenario {
    fn name(&self) -> &str;
    fn problem(&self) -> &ValidatedProblem;
    fn dt(&self) -> f64;
    fn initial_state(&self) -> Vec<f64>;
    fn goal(&self) -> Vec<f64>;
    fn default_steps(&self) -> usize;
    fn default_settings(&self) -> Settings;
    /// Tracking references for control step `step` taken from `state`.
    fn references(&self, step: usize, state: &[f64], refs: &mut References);
}

/// Exact zero-order-hold discretization of `axes` decoupled double
/// integrators, state ordered `[positions..., velocities...]`.
pub fn double_integrator_blocks(axes: usize, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = 2 * axes;
    let mut a = DMatrix::identity(n, n);
    let mut b = DMatrix::zeros(n, axes);
    for i in 0..axes {
        a[(i, axes + i)] = dt;
        b[(i, i)] = 0.5 * dt * dt;
        b[(axes + i, i)] = dt;
    }
    (a, b)
}

/// Affine term of a constant vertical acceleration `-gravity` on a 3-axis
/// point mass.
pub fn gravity_drift(dt: f64, gravity: f64) -> DVector<f64> {
    let mut c = DVector::zeros(6);
    c[2] = -0.5 * gravity * dt * dt;
    c[5] = -gravity * dt;
    c
}

/// `x⁺ = A x + B u + c` evaluated in plain f64.
pub fn step_dynamics(problem: &ValidatedProblem, x: &[f64], u: &[f64]) -> Vec<f64> {
    let d = problem.dynamics();
    let next = &d.a * DVector::from_column_slice(x) + &d.b * DVector::from_column_slice(u) + &d.c;
    next.as_slice().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_axis_discretization() {
        let (a, b) = double_integrator_blocks(1, 0.02);
        assert_eq!(a, nalgebra::dmatrix![1.0, 0.02; 0.0, 1.0]);
        assert!((b[(0, 0)] - 0.0002).abs() < 1e-18);
        assert_eq!(b[(1, 0)], 0.02);
    }

    #[test]
    fn gravity_pattern() {
        let c = gravity_drift(0.05, 9.81);
        assert_eq!(&c.as_slice()[..2], &[0.0, 0.0]);
        assert!((c[2] + 9.81 * 0.05 * 0.05 / 2.0).abs() < 1e-15);
        assert!((c[5] + 9.81 * 0.05).abs() < 1e-15);
    }
}
