use std::time::Instant;

use serde::Serialize;
use tinysocp::{solve, Settings, SolverCache, ValidatedProblem, Workspace};
use tinysocp_codegen::{estimate_footprint, Precision};

use crate::rocket::{RocketConfig, RocketLanding};
use crate::safety_filter::{SafetyFilter, SafetyFilterConfig};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    SafetyFilter,
    Rocket,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "safety-filter" => Ok(Suite::SafetyFilter),
            "rocket" => Ok(Suite::Rocket),
            other => Err(format!("unknown suite `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    State,
    Horizon,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "state" => Ok(SweepAxis::State),
            "horizon" => Ok(SweepAxis::Horizon),
            other => Err(format!("unknown sweep `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationTiming {
    pub mean_seconds: f64,
    pub median_seconds: f64,
    pub max_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    pub timing: IterationTiming,
    pub data_bytes: usize,
    pub workspace_bytes: usize,
}

/// Per-iteration wall time of [`solve`], from `repeats` timed runs of
/// `iterations` iterations each (residual checks off, so every run does
/// exactly that many iterations).
pub fn time_per_iteration(
    problem: &ValidatedProblem,
    settings: &Settings,
    x0: &[f64],
    iterations: usize,
    repeats: usize,
) -> IterationTiming {
    let cache = SolverCache::new(problem, settings.rho).expect("cache builds");
    let settings = Settings {
        max_iter: iterations.max(1),
        check_termination: 0,
        ..settings.clone()
    };
    let mut ws = Workspace::new(problem.dims());
    // one untimed run to fault in the workspace
    solve(&mut ws, problem, &cache, &settings, x0);
    let mut samples: Vec<f64> = (0..repeats.max(1))
        .map(|_| {
            ws.reset();
            let start = Instant::now();
            std::hint::black_box(solve(&mut ws, problem, &cache, &settings, x0));
            start.elapsed().as_secs_f64() / settings.max_iter as f64
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    IterationTiming {
        mean_seconds: samples.iter().sum::<f64>() / samples.len() as f64,
        median_seconds: samples[samples.len() / 2],
        max_seconds: *samples.last().unwrap(),
    }
}

fn suite_instance(suite: Suite, axis: SweepAxis, value: usize) -> Result<Box<dyn Scenario>, String> {
    match (suite, axis) {
        (Suite::Rocket, SweepAxis::Horizon) => Ok(Box::new(RocketLanding::new(RocketConfig {
            horizon: value,
            ..Default::default()
        }))),
        (Suite::Rocket, SweepAxis::State) => {
            Err("the rocket suite has fixed dimensions (n = 6, m = 3)".into())
        }
        (Suite::SafetyFilter, SweepAxis::Horizon) => {
            Ok(Box::new(SafetyFilter::new(SafetyFilterConfig {
                horizon: value,
                ..Default::default()
            })))
        }
        (Suite::SafetyFilter, SweepAxis::State) => {
            if value < 2 || !value.is_multiple_of(2) {
                return Err(format!("state dimension {value} must be even and >= 2"));
            }
            Ok(Box::new(SafetyFilter::new(SafetyFilterConfig {
                axes: value / 2,
                ..Default::default()
            })))
        }
    }
}

/// Timing and footprint at each sweep value. Footprints are for the
/// default (32-bit) code generation precision.
pub fn sweep(
    suite: Suite,
    axis: SweepAxis,
    values: &[usize],
    iterations: usize,
    repeats: usize,
) -> Result<Vec<SweepPoint>, String> {
    values
        .iter()
        .map(|&v| {
            if axis == SweepAxis::Horizon && v < 2 {
                return Err(format!("horizon {v} must be >= 2"));
            }
            let sc = suite_instance(suite, axis, v)?;
            let problem = sc.problem();
            let dims = problem.dims();
            let timing = time_per_iteration(
                problem,
                &sc.default_settings(),
                &sc.initial_state(),
                iterations,
                repeats,
            );
            let fp = estimate_footprint(problem, Precision::default());
            Ok(SweepPoint {
                n: dims.n,
                m: dims.m,
                horizon: dims.horizon,
                timing,
                data_bytes: fp.data_bytes,
                workspace_bytes: fp.workspace_bytes,
            })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        num += (a - mx) * (b - my);
        den += (a - mx) * (a - mx);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_laws() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((log_log_slope(&x, &y) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn rocket_state_sweep_is_rejected() {
        assert!(sweep(Suite::Rocket, SweepAxis::State, &[6], 1, 1).is_err());
    }

    #[test]
    fn footprint_points_are_affine_in_horizon() {
        let pts = sweep(Suite::Rocket, SweepAxis::Horizon, &[8, 16, 32], 2, 1).unwrap();
        let d1 = pts[1].workspace_bytes - pts[0].workspace_bytes;
        let d2 = pts[2].workspace_bytes - pts[1].workspace_bytes;
        assert_eq!(2 * d1, d2);
    }
}
