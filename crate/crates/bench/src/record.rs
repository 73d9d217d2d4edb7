use std::io::Write;

use serde::Serialize;

use crate::closed_loop::{ClosedLoopMetrics, ClosedLoopOptions, ClosedLoopRun};
use crate::scenario::Scenario;

/// Structured summary of one closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub problem_id: String,
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    pub budget: usize,
    pub warm_start: bool,
    pub seed: u64,
    pub steps: usize,
    pub iterations_per_step: Vec<usize>,
    pub metrics: ClosedLoopMetrics,
}

impl RunRecord {
    pub fn new(scenario: &dyn Scenario, opts: &ClosedLoopOptions, run: &ClosedLoopRun) -> Self {
        let dims = scenario.problem().dims();
        Self {
            problem_id: scenario.name().to_string(),
            n: dims.n,
            m: dims.m,
            horizon: dims.horizon,
            budget: opts.budget,
            warm_start: opts.warm_start,
            seed: opts.seed,
            steps: opts.steps,
            iterations_per_step: run.records.iter().map(|r| r.iterations).collect(),
            metrics: run.metrics,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Header `step,t,x0..,u0..,pri_res,dua_res,iters`.
pub fn trajectory_header(n: usize, m: usize) -> Vec<String> {
    let mut h = vec!["step".to_string(), "t".to_string()];
    h.extend((0..n).map(|i| format!("x{i}")));
    h.extend((0..m).map(|i| format!("u{i}")));
    h.extend(["pri_res", "dua_res", "iters"].map(String::from));
    h
}

/// One row per control step in the fixed trajectory layout.
pub fn write_trajectory_csv<W: Write>(run: &ClosedLoopRun, n: usize, m: usize, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(n, m))?;
    for r in &run.records {
        let mut row = vec![r.step.to_string(), r.t.to_string()];
        row.extend(r.x.iter().chain(&r.u).map(|v| v.to_string()));
        row.push(r.pri_res.to_string());
        row.push(r.dua_res.to_string());
        row.push(r.iterations.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
