//! Benchmark problems and the closed-loop harness.
//!
//! Three scenarios: a box-constrained safety filter on stacked double
//! integrators, rocket landing under a thrust cone, and a spiral landing
//! that tracks a helix inside a position cone. [`run_closed_loop`] drives
//! any of them with a fixed iteration budget per control step and reports
//! constraint violation and landing error.

pub mod closed_loop;
pub mod record;
pub mod rocket;
pub mod safety_filter;
pub mod scenario;
pub mod spiral;
pub mod timing;

pub use closed_loop::{run_closed_loop, ClosedLoopMetrics, ClosedLoopOptions, ClosedLoopRun, StepRecord};
pub use record::{trajectory_header, write_trajectory_csv, RunRecord};
pub use rocket::{RocketConfig, RocketLanding};
pub use safety_filter::{SafetyFilter, SafetyFilterConfig};
pub use scenario::{double_integrator_blocks, gravity_drift, step_dynamics, Scenario};
pub use spiral::{SpiralConfig, SpiralLanding};
pub use timing::{log_log_slope, sweep, time_per_iteration, Suite, SweepAxis, SweepPoint};
