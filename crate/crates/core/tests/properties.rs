mod common;

use proptest::prelude::*;
use tinysocp::projection::{box_violation, cone_violation};
use tinysocp::{
    refs_to_linear_cost, solve, validate, Bounds, ConeSlice, ConstraintSet, LinearCost,
    ProblemDefinition, References, Settings, SolverCache, Stages, TerminationStatus,
    ValidatedProblem, Workspace,
};

fn constrained(seed: u64, horizon: usize) -> ValidatedProblem {
    let mut rng = common::rng(seed);
    let base = common::random_problem(&mut rng, 4, 3, horizon, true);
    let inf = f64::INFINITY;
    validate(&ProblemDefinition {
        constraints: ConstraintSet {
            state_bounds: Some(Bounds::symmetric(&[inf, inf, inf, 0.3])),
            input_bounds: Some(Bounds::symmetric(&[0.5, inf, inf])),
            state_cones: vec![ConeSlice::new(0, 3)],
            input_cones: vec![ConeSlice::new(1, 2)],
        },
        ..base.definition().clone()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_iterate_is_dynamically_feasible_with_feasible_slacks(
        seed in any::<u64>(),
        horizon in 2usize..12,
        rho in 0.1f64..20.0,
        x0 in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let p = constrained(seed, horizon);
        let cache = SolverCache::new(&p, rho).unwrap();
        let step = Settings { rho, max_iter: 1, check_termination: 0, ..Settings::default() };
        let mut ws = Workspace::new(p.dims());
        let xb = p.constraints().state_bounds.clone().unwrap();
        let ub = p.constraints().input_bounds.clone().unwrap();
        let d = p.dynamics();
        for _ in 0..25 {
            solve(&mut ws, &p, &cache, &step, &x0);
            prop_assert_eq!(ws.x.stage(0), &x0[..]);
            for k in 0..horizon - 1 {
                let pred = &d.a * ws.x.stage_vector(k) + &d.b * ws.u.stage_vector(k) + &d.c;
                let scale = 1.0 + pred.amax();
                prop_assert!((pred - ws.x.stage_vector(k + 1)).amax() <= 1e-12 * scale);
            }
            for z in ws.z.iter() {
                prop_assert!(cone_violation(&z[0..3]) <= 1e-12);
                prop_assert_eq!(box_violation(z, xb.lower.as_slice(), xb.upper.as_slice()), 0.0);
            }
            for w in ws.w.iter() {
                prop_assert!(cone_violation(&w[1..3]) <= 1e-12);
                prop_assert_eq!(box_violation(w, ub.lower.as_slice(), ub.upper.as_slice()), 0.0);
            }
        }
    }

    #[test]
    fn solved_exit_meets_tolerances(
        seed in any::<u64>(),
        tol in 1e-6f64..1e-1,
        max_iter in 1usize..400,
        check in 1usize..20,
    ) {
        let p = constrained(seed, 8);
        let settings = Settings { abs_pri_tol: tol, abs_dua_tol: tol, max_iter, check_termination: check, ..Settings::default() };
        let cache = SolverCache::new(&p, settings.rho).unwrap();
        let mut ws = Workspace::new(p.dims());
        let s = solve(&mut ws, &p, &cache, &settings, &[0.2, 0.1, 0.5, 0.0]);
        prop_assert!(s.iterations <= max_iter);
        match s.status {
            TerminationStatus::Solved => {
                prop_assert!(s.pri_res < tol && s.dua_res < tol);
                prop_assert_eq!(s.iterations % check, 0);
            }
            TerminationStatus::MaxIters => prop_assert_eq!(s.iterations, max_iter),
            TerminationStatus::Unsolved => prop_assert!(false, "status left unsolved"),
        }
    }

    #[test]
    fn solve_is_deterministic(seed in any::<u64>(), iters in 1usize..60) {
        let p = constrained(seed, 6);
        let settings = Settings { max_iter: iters, ..Settings::default() };
        let cache = SolverCache::new(&p, settings.rho).unwrap();
        let x0 = [0.3, -0.1, 0.4, 0.2];
        let mut a = Workspace::new(p.dims());
        let mut b = Workspace::new(p.dims());
        let sa = solve(&mut a, &p, &cache, &settings, &x0);
        let sb = solve(&mut b, &p, &cache, &settings, &x0);
        prop_assert_eq!(sa, sb);
        prop_assert_eq!(a.report(), b.report());
    }

    #[test]
    fn validation_is_repeatable(seed in any::<u64>()) {
        let p = constrained(seed, 5);
        let again = validate(p.definition()).unwrap();
        prop_assert_eq!(&p, &again);
    }

    #[test]
    fn tracking_cost_is_linear_in_references(
        seed in any::<u64>(),
        xr in prop::collection::vec(-4.0f64..4.0, 4),
        ur in prop::collection::vec(-4.0f64..4.0, 3),
    ) {
        let p = constrained(seed, 5);
        let cache = SolverCache::new(&p, 1.0).unwrap();
        let mut refs = References::zeros(p.dims());
        refs.x_ref = Stages::repeat(&xr, 5);
        refs.u_ref = Stages::repeat(&ur, 4);
        let once = LinearCost::from_references(&p, &cache.pinf, &refs);
        refs.x_ref.scale(2.0);
        refs.u_ref.scale(2.0);
        let mut twice = LinearCost::zeros(p.dims());
        refs_to_linear_cost(&p, &cache.pinf, &refs, &mut twice);
        for (a, b) in once.q.as_slice().iter().zip(twice.q.as_slice()) {
            prop_assert_eq!(2.0 * a, *b);
        }
        for (a, b) in once.r.as_slice().iter().zip(twice.r.as_slice()) {
            prop_assert_eq!(2.0 * a, *b);
        }
    }
}
