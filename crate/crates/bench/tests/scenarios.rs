use tinysocp::Settings;
use tinysocp_bench::*;

fn max_abs_position(run: &ClosedLoopRun) -> f64 {
    run.records
        .iter()
        .map(|r| r.x[0].abs())
        .chain([run.final_state[0].abs()])
        .fold(0.0, f64::max)
}

#[test]
fn double_integrator_discretization() {
    let (a, b) = double_integrator_blocks(1, 0.02);
    assert_eq!(a.as_slice(), &[1.0, 0.0, 0.02, 1.0]);
    assert!((b[(0, 0)] - 0.0002).abs() < 1e-15);
    assert!((b[(1, 0)] - 0.02).abs() < 1e-15);
}

#[test]
fn gravity_drift_pattern() {
    let c = gravity_drift(0.05, 9.81);
    let expect = [0.0, 0.0, -9.81 * 0.05 * 0.05 / 2.0, 0.0, 0.0, -9.81 * 0.05];
    for (got, want) in c.iter().zip(expect) {
        assert!((got - want).abs() < 1e-15);
    }
}

#[test]
fn safety_filter_keeps_position_inside_the_box() {
    let sf = SafetyFilter::new(SafetyFilterConfig::default());
    let settings = sf.default_settings();
    let steps = sf.default_steps();
    let nominal = sf
        .run_nominal(steps)
        .iter()
        .map(|x| x[0].abs())
        .fold(0.0, f64::max);
    assert!(nominal > 1.0, "nominal peak {nominal}");

    let run = run_closed_loop(&sf, &settings, &ClosedLoopOptions::new(steps, settings.max_iter))
        .unwrap();
    let peak = max_abs_position(&run);
    let limit = sf.config.position_limit + settings.abs_pri_tol;
    assert!(peak <= limit, "filtered peak {peak} > {limit}");
    assert!(run.records.iter().all(|r| r.solved));
}

fn rocket_metrics(rk: &RocketLanding, budget: usize, warm: bool) -> ClosedLoopRun {
    let mut opts = ClosedLoopOptions::new(rk.default_steps(), budget);
    opts.warm_start = warm;
    run_closed_loop(rk, &rk.default_settings(), &opts).unwrap()
}

#[test]
fn rocket_budget_ladder() {
    let rk = RocketLanding::new(RocketConfig::default());
    let tight = rocket_metrics(&rk, 3, true);
    let warm = rocket_metrics(&rk, 33, true);
    let cold = rocket_metrics(&rk, 33, false);
    let generous = rocket_metrics(&rk, 444, true);
    for r in &generous.records {
        assert!(r.input_violation <= 1e-2, "step {} violation {}", r.step, r.input_violation);
    }
    assert!(generous.metrics.landing_error <= tight.metrics.landing_error);
    assert!(
        warm.metrics.landing_error < cold.metrics.landing_error,
        "warm {} cold {}",
        warm.metrics.landing_error,
        cold.metrics.landing_error
    );
    // three iterations are not enough to respect the cone
    assert!(tight.metrics.max_input_violation > 1e-2);
}

fn outside_cone(x: &[f64]) -> f64 {
    x[0].hypot(x[1]) - x[2]
}

#[test]
fn spiral_landing_stays_in_the_cone() {
    let sp = SpiralLanding::new(SpiralConfig::default());
    let settings = sp.default_settings();
    let opts = ClosedLoopOptions::new(sp.default_steps(), settings.max_iter);
    let run = run_closed_loop(&sp, &settings, &opts).unwrap();
    assert!(run.records.iter().all(|r| r.solved));
    for r in &run.records {
        assert!(outside_cone(&r.x) <= 1e-2, "step {} at {:?}", r.step, r.x);
    }
    assert!(outside_cone(&run.final_state) <= 1e-2);
    let pos = run.final_state[..3].iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(pos < 0.05, "final position {pos}");

    let free = Settings {
        en_state_soc: false,
        ..settings
    };
    let run = run_closed_loop(&sp, &free, &opts).unwrap();
    let violating = run.records.iter().filter(|r| outside_cone(&r.x) > 1e-2).count();
    assert!(violating >= 1);
}

#[test]
fn empty_run_has_zero_metrics() {
    let rk = RocketLanding::new(RocketConfig::default());
    let run = run_closed_loop(&rk, &rk.default_settings(), &ClosedLoopOptions::new(0, 10)).unwrap();
    assert!(run.records.is_empty());
    assert_eq!(run.metrics, ClosedLoopMetrics::default());
}

#[test]
fn seeded_runs_are_deterministic() {
    let rk = RocketLanding::new(RocketConfig::default());
    let mut opts = ClosedLoopOptions::new(30, 33);
    opts.perturbation = 0.5;
    opts.seed = 11;
    let a = run_closed_loop(&rk, &rk.default_settings(), &opts).unwrap();
    let b = run_closed_loop(&rk, &rk.default_settings(), &opts).unwrap();
    assert_eq!(a, b);
    opts.seed = 12;
    let c = run_closed_loop(&rk, &rk.default_settings(), &opts).unwrap();
    assert_ne!(a.final_state, c.final_state);
}

#[test]
fn records_and_trajectories_have_the_fixed_layout() {
    let rk = RocketLanding::new(RocketConfig::default());
    let opts = ClosedLoopOptions::new(5, 20);
    let run = run_closed_loop(&rk, &rk.default_settings(), &opts).unwrap();
    let mut buf = Vec::new();
    write_trajectory_csv(&run, 6, 3, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,t,x0,x1,x2,x3,x4,x5,u0,u1,u2,pri_res,dua_res,iters"
    );
    assert_eq!(lines.count(), 5);

    let json = RunRecord::new(&rk, &opts, &run).to_json();
    assert!(!json.contains('\n'));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["problem_id"], "rocket");
    assert_eq!(v["iterations_per_step"].as_array().unwrap().len(), 5);
}

#[test]
fn per_iteration_time_is_linear_in_horizon() {
    let horizons = [8, 16, 32, 64, 128, 256];
    let pts = sweep(Suite::Rocket, SweepAxis::Horizon, &horizons, 200, 15).unwrap();
    let x: Vec<f64> = horizons.iter().map(|&h| h as f64).collect();
    let t: Vec<f64> = pts.iter().map(|p| p.timing.median_seconds).collect();
    let slope = log_log_slope(&x, &t);
    assert!(slope <= 1.15, "time exponent {slope}");

    // equal horizon increments add equal bytes
    let steps: Vec<usize> = pts
        .windows(2)
        .map(|w| (w[1].workspace_bytes - w[0].workspace_bytes) / (w[1].horizon - w[0].horizon))
        .collect();
    assert!(steps.windows(2).all(|w| w[0] == w[1]));
}
