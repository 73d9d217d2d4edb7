//! Embedded-style conic model-predictive control.
//!
//! The solver runs ADMM on a linear MPC problem with box and second-order
//! cone constraints. The primal update is a Riccati backward pass that only
//! touches an infinite-horizon LQR solution cached offline, so the online
//! loop is matrix-vector products, projections and vector updates, with no
//! heap allocation after setup.
//!
//! ```
//! use nalgebra::{dmatrix, dvector};
//! use tinysocp::{
//!     validate, Bounds, ConstraintSet, CostData, LinearDynamics, ProblemDefinition,
//!     ProblemDims, Settings, Solver, TerminationStatus,
//! };
//!
//! let problem = validate(&ProblemDefinition {
//!     dims: ProblemDims::new(2, 1, 20),
//!     dynamics: LinearDynamics {
//!         a: dmatrix![1.0, 0.1; 0.0, 1.0],
//!         b: dmatrix![0.005; 0.1],
//!         c: dvector![0.0, 0.0],
//!     },
//!     cost: CostData { q: dmatrix![1.0, 0.0; 0.0, 1.0], r: dmatrix![0.1] },
//!     constraints: ConstraintSet {
//!         input_bounds: Some(Bounds::symmetric(&[1.0])),
//!         ..Default::default()
//!     },
//! })
//! .unwrap();
//! let mut solver = Solver::new(problem, Settings::default()).unwrap();
//! let summary = solver.solve(&[1.0, 0.0]);
//! assert_eq!(summary.status, TerminationStatus::Solved);
//! ```

pub mod format;
pub mod oracle;
pub mod problem;
pub mod projection;
pub mod riccati;
pub mod solver;
pub mod stages;

pub use problem::{
    refs_to_linear_cost, validate, Bounds, ConeSlice, ConstraintSet, CostData, LinearCost,
    LinearDynamics, ProblemDefinition, ProblemDims, References, Settings, ValidatedProblem,
    ValidationError,
};
pub use riccati::{RiccatiError, SolverCache};
pub use solver::{
    solve, SetupError, SolveReport, SolveSummary, Solver, TerminationStatus, Workspace,
};
pub use stages::Stages;
