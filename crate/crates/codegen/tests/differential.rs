//! Builds generated trees with rustc and compares their iterates against the
//! library.

use std::path::Path;
use std::process::Command;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tinysocp::{
    refs_to_linear_cost, solve, validate, Bounds, ConeSlice, ConstraintSet, CostData,
    LinearDynamics, ProblemDefinition, ProblemDims, References, Settings, SolverCache, Stages,
    ValidatedProblem, Workspace,
};
use tinysocp_codegen::{render, CodegenOptions, Precision, DATA_PATH, MAIN_PATH, SOLVER_PATH};

struct Case {
    problem: ValidatedProblem,
    settings: Settings,
    x0: Vec<f64>,
    refs: References,
}

fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 3 + (seed as usize % 4);
    let m = 2 + (seed as usize % 2);
    let horizon = 4 + (seed as usize * 3) % 12;
    let mut u = |s: f64| rng.random_range(-s..s);
    let a = DMatrix::identity(n, n) * 0.9 + DMatrix::from_fn(n, n, |_, _| u(0.15));
    let b = DMatrix::from_fn(n, m, |_, _| u(1.0));
    let c = DVector::from_fn(n, |_, _| u(0.05));
    let l = DMatrix::from_fn(n, n, |_, _| u(1.0));
    let q = &l * l.transpose() * 0.3 + DMatrix::identity(n, n) * 0.2;
    let lr = DMatrix::from_fn(m, m, |_, _| u(1.0));
    let r = &lr * lr.transpose() * 0.1 + DMatrix::identity(m, m) * 0.5;

    let inf = f64::INFINITY;
    let mut x_hi = vec![inf; n];
    x_hi[n - 1] = 0.8;
    let x_lo: Vec<f64> = x_hi.iter().map(|v| -v).collect();
    let mut u_hi = vec![inf; m];
    u_hi[0] = 0.7;
    let input_cones = if m >= 3 { vec![ConeSlice::new(1, m - 1)] } else { vec![] };
    let constraints = ConstraintSet {
        state_bounds: Some(Bounds::new(DVector::from_vec(x_lo), DVector::from_vec(x_hi))),
        input_bounds: Some(Bounds::new(
            DVector::from_iterator(m, u_hi.iter().map(|v| -v)),
            DVector::from_vec(u_hi),
        )),
        state_cones: vec![ConeSlice::new(0, n - 1)],
        input_cones,
    };
    let problem = validate(&ProblemDefinition {
        dims: ProblemDims::new(n, m, horizon),
        dynamics: LinearDynamics { a, b, c },
        cost: CostData { q, r },
        constraints,
    })
    .unwrap();
    let x0: Vec<f64> = (0..n).map(|_| u(1.0)).collect();
    let mut refs = References::zeros(problem.dims());
    let xr: Vec<f64> = (0..n).map(|_| u(0.5)).collect();
    refs.x_ref = Stages::repeat(&xr, horizon);
    refs.u_ref.as_mut_slice().iter_mut().for_each(|v| *v = u(0.3));
    let settings = Settings {
        rho: 0.5 + seed as f64 * 0.37,
        max_iter: 100,
        check_termination: 0,
        ..Settings::default()
    };
    Case { problem, settings, x0, refs }
}

fn build_and_run(case: &Case, precision: Precision, dir: &Path) -> String {
    let cache = SolverCache::new(&case.problem, case.settings.rho).unwrap();
    let opts = CodegenOptions {
        precision,
        x0: Some(case.x0.clone()),
        references: Some(case.refs.clone()),
        byte_budget: None,
    };
    let tree = render(&case.problem, &cache, &case.settings, &opts).unwrap();
    tree.write_to(dir).unwrap();
    let exe = dir.join("main_example");
    let out = Command::new("rustc")
        .args(["--edition", "2021", "-D", "warnings", "-C", "opt-level=1", "-o"])
        .arg(&exe)
        .arg(dir.join(MAIN_PATH))
        .output()
        .expect("rustc on PATH");
    assert!(
        out.status.success(),
        "generated tree failed to build:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stderr.is_empty(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success());
    String::from_utf8(run.stdout).unwrap()
}

struct Parsed {
    status: String,
    iterations: usize,
    pri: f64,
    dua: f64,
    stages: Vec<(String, usize, Vec<f64>)>,
    workspace_bytes: usize,
}

fn parse(out: &str, precision: Precision) -> Parsed {
    let bits = |s: &str| match precision {
        Precision::F64 => f64::from_bits(u64::from_str_radix(s, 16).unwrap()),
        Precision::F32 => f32::from_bits(u32::from_str_radix(s, 16).unwrap()) as f64,
    };
    let mut p = Parsed {
        status: String::new(),
        iterations: 0,
        pri: 0.0,
        dua: 0.0,
        stages: Vec::new(),
        workspace_bytes: 0,
    };
    for line in out.lines() {
        let mut it = line.split_whitespace();
        let key = it.next().unwrap();
        match key {
            "status" => p.status = it.next().unwrap().to_string(),
            "iterations" => p.iterations = it.next().unwrap().parse().unwrap(),
            "pri_res" => p.pri = bits(it.next().unwrap()),
            "dua_res" => p.dua = bits(it.next().unwrap()),
            "workspace_bytes" => p.workspace_bytes = it.next().unwrap().parse().unwrap(),
            _ => {
                let k = it.next().unwrap().parse().unwrap();
                p.stages.push((key.to_string(), k, it.map(bits).collect()));
            }
        }
    }
    p
}

fn library_run(case: &Case) -> Workspace {
    let cache = SolverCache::new(&case.problem, case.settings.rho).unwrap();
    let mut ws = Workspace::new(case.problem.dims());
    refs_to_linear_cost(&case.problem, &cache.pinf, &case.refs, &mut ws.linear);
    solve(&mut ws, &case.problem, &cache, &case.settings, &case.x0);
    ws
}

fn library_stage<'a>(ws: &'a Workspace, name: &str, k: usize) -> &'a [f64] {
    match name {
        "x" => ws.x.stage(k),
        "u" => ws.u.stage(k),
        "z" => ws.z.stage(k),
        "w" => ws.w.stage(k),
        "y" => ws.y.stage(k),
        "g" => ws.g.stage(k),
        other => panic!("unexpected key {other}"),
    }
}

#[test]
fn generated_solver_matches_library_bit_for_bit() {
    let cases: Vec<Case> = (0..10).map(random_case).collect();
    let dirs: Vec<tempfile::TempDir> = (0..10).map(|_| tempfile::tempdir().unwrap()).collect();
    let outputs: Vec<String> = std::thread::scope(|s| {
        let handles: Vec<_> = cases
            .iter()
            .zip(&dirs)
            .map(|(c, d)| s.spawn(move || build_and_run(c, Precision::F64, d.path())))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for (i, (case, out)) in cases.iter().zip(&outputs).enumerate() {
        let ws = library_run(case);
        let gen = parse(out, Precision::F64);
        let h = case.problem.dims().horizon;
        assert_eq!(gen.status, ws.status.as_str(), "case {i}");
        assert_eq!(gen.iterations, 100);
        assert_eq!(gen.pri.to_bits(), ws.pri_res.to_bits(), "case {i}");
        assert_eq!(gen.dua.to_bits(), ws.dua_res.to_bits(), "case {i}");
        assert_eq!(gen.stages.len(), 3 * h + 3 * (h - 1));
        for (name, k, vals) in &gen.stages {
            let lib = library_stage(&ws, name, *k);
            let same = lib.iter().zip(vals).all(|(a, b)| a.to_bits() == b.to_bits());
            assert!(same, "case {i} {name}[{k}]: {lib:?} vs {vals:?}");
        }
        let fp = tinysocp_codegen::estimate_footprint(&case.problem, Precision::F64);
        assert_eq!(gen.workspace_bytes, fp.workspace_bytes, "case {i}");
    }
}

#[test]
fn single_precision_tracks_library_on_converged_solve() {
    let mut case = random_case(2);
    // no drift and a start at the cone apex: x = 0, u = 0 is feasible
    let mut def = case.problem.definition().clone();
    def.dynamics.c.fill(0.0);
    case.problem = validate(&def).unwrap();
    case.x0.iter_mut().for_each(|v| *v = 0.0);
    case.settings = Settings {
        rho: 2.0,
        abs_pri_tol: 1e-5,
        abs_dua_tol: 1e-5,
        max_iter: 4000,
        ..Settings::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let gen = parse(&build_and_run(&case, Precision::F32, dir.path()), Precision::F32);
    assert_eq!(gen.status, "solved", "pri {:e} dua {:e} lib {:?}", gen.pri, gen.dua, library_run(&case).summary());

    // reference: the library at 64-bit, converged well past the f32 run
    case.settings.abs_pri_tol = 1e-9;
    case.settings.abs_dua_tol = 1e-9;
    case.settings.max_iter = 100_000;
    let ws = library_run(&case);
    assert_eq!(ws.status.as_str(), "solved");
    let mut worst = 0.0_f64;
    for (name, k, vals) in gen.stages.iter().filter(|(n, _, _)| n == "x" || n == "u") {
        for (a, b) in library_stage(&ws, name, *k).iter().zip(vals) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst < 1e-4, "f32 deviation {worst:e}");
    let fp = tinysocp_codegen::estimate_footprint(&case.problem, Precision::F32);
    assert_eq!(gen.workspace_bytes, fp.workspace_bytes);
}

#[test]
fn termination_checks_match_library() {
    let mut case = random_case(5);
    case.settings.check_termination = 7;
    case.settings.max_iter = 400;
    let dir = tempfile::tempdir().unwrap();
    let gen = parse(&build_and_run(&case, Precision::F64, dir.path()), Precision::F64);
    let ws = library_run(&case);
    assert_eq!(gen.status, ws.status.as_str());
    assert_eq!(gen.iterations, ws.iter);
    assert_eq!(gen.pri.to_bits(), ws.pri_res.to_bits());
}

#[test]
fn emitted_paths_are_fixed() {
    let case = random_case(1);
    let cache = SolverCache::new(&case.problem, 1.0).unwrap();
    let tree = render(&case.problem, &cache, &case.settings, &CodegenOptions::default()).unwrap();
    for p in [SOLVER_PATH, DATA_PATH, MAIN_PATH, "manifest.txt"] {
        assert!(tree.file(p).is_some(), "{p}");
    }
    assert!(tree.file(DATA_PATH).unwrap().contains("pub type Float = f32;"));
}
