//! Command implementations behind the `tinysocp` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use tinysocp::format::{parse_problem, parse_references, parse_vector_list, FormatError, ProblemFile};
use tinysocp::{References, Solver, TerminationStatus};
use tinysocp_bench::{
    run_closed_loop, sweep, write_trajectory_csv, ClosedLoopOptions, RocketConfig, RocketLanding,
    RunRecord, SafetyFilter, SafetyFilterConfig, Scenario, SpiralConfig, SpiralLanding, Suite,
    SweepAxis,
};
use tinysocp_codegen::{generate, CodegenOptions, Precision};

pub mod verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_MAX_ITERS: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tinysocp", version, about = "Conic MPC solver, simulator and code generator")]
pub struct Cli {
    /// Seed for randomized content.
    #[arg(long, global = true, env = "TINYSOCP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem file from an initial state.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        /// Initial state as comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        /// Reference file with `x_ref` and/or `u_ref` rows.
        #[arg(long)]
        xref: Option<PathBuf>,
        /// Trajectory table; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-loop run of a built-in scenario.
    Simulate {
        #[arg(long, value_enum)]
        scenario: ScenarioName,
        #[arg(long)]
        steps: usize,
        /// Iteration budget per control step.
        #[arg(long)]
        budget: usize,
        /// Zero the solver state before every step.
        #[arg(long)]
        cold_start: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-iteration time and footprint over a dimension sweep.
    Bench {
        #[arg(long, value_enum)]
        suite: SuiteName,
        #[arg(long, value_enum)]
        sweep: SweepName,
        /// Inclusive range `A..B`.
        #[arg(long, value_parser = parse_range)]
        range: (usize, usize),
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit a self-contained solver tree for a problem file.
    Codegen {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "f32")]
        precision: Precision,
    },
    /// Run the oracle checks against a problem file.
    Verify {
        #[arg(long)]
        problem: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioName {
    SafetyFilter,
    Rocket,
    Spiral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteName {
    SafetyFilter,
    Rocket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepName {
    State,
    Horizon,
}

pub fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("`{s}` is not of the form A..B"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("`{t}` is not a non-negative integer"))
    };
    let (a, b) = (num(a)?, num(b)?);
    if a > b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok((a, b))
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{flag}: cannot read {path}: {source}")]
    Read {
        flag: &'static str,
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{flag}: {source}")]
    Format {
        flag: &'static str,
        source: FormatError,
    },
    #[error("{0}")]
    Input(String),
}

/// Writes through a temporary in the destination directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let err = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

fn read(flag: &'static str, path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        flag,
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_problem(path: &Path) -> Result<ProblemFile, CliError> {
    parse_problem(&read("--problem", path)?).map_err(|source| CliError::Format {
        flag: "--problem",
        source,
    })
}

/// Runs a command, writing human-readable output to `stdout`. Returns the
/// process exit code for outcomes that are not errors.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Solve {
            problem,
            x0,
            xref,
            out,
        } => cmd_solve(problem, x0, xref.as_deref(), out.as_deref(), stdout),
        Command::Simulate {
            scenario,
            steps,
            budget,
            cold_start,
            out,
        } => cmd_simulate(*scenario, *steps, *budget, *cold_start, cli.seed, out, stdout),
        Command::Bench {
            suite,
            sweep,
            range,
            out,
        } => cmd_bench(*suite, *sweep, *range, out, stdout),
        Command::Codegen {
            problem,
            out,
            precision,
        } => cmd_codegen(problem, out, *precision, stdout),
        Command::Verify { problem } => {
            let file = load_problem(problem)?;
            let checks = verify::run_checks(&file, cli.seed);
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                writeln!(stdout, "{tag} {}: {}", c.name, c.detail).ok();
            }
            Ok(if checks.iter().all(|c| c.passed) {
                EXIT_OK
            } else {
                EXIT_INPUT
            })
        }
    }
}

fn cmd_solve(
    problem_path: &Path,
    x0: &str,
    xref: Option<&Path>,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<i32, CliError> {
    let ProblemFile { problem, settings } = load_problem(problem_path)?;
    let dims = problem.dims();
    let x0 = parse_vector_list(x0, dims.n).map_err(|source| CliError::Format {
        flag: "--x0",
        source,
    })?;
    let refs = match xref {
        Some(path) => parse_references(&read("--xref", path)?, dims).map_err(|source| {
            CliError::Format {
                flag: "--xref",
                source,
            }
        })?,
        None => References::zeros(dims),
    };
    let mut solver =
        Solver::new(problem, settings).map_err(|e| CliError::Input(format!("--problem: {e}")))?;
    solver
        .set_references(&refs)
        .map_err(|e| CliError::Input(format!("--xref: {e}")))?;
    let summary = solver.solve(&x0);

    let ws = &solver.workspace;
    let mut table = String::from("stage");
    for i in 0..dims.n {
        table.push_str(&format!(",x{i}"));
    }
    for i in 0..dims.m {
        table.push_str(&format!(",u{i}"));
    }
    table.push('\n');
    for k in 0..dims.horizon {
        table.push_str(&k.to_string());
        for v in ws.x.stage(k) {
            table.push_str(&format!(",{v}"));
        }
        if k + 1 < dims.horizon {
            for v in ws.u.stage(k) {
                table.push_str(&format!(",{v}"));
            }
        } else {
            // the last stage has no input
            table.push_str(&",".repeat(dims.m));
        }
        table.push('\n');
    }
    match out {
        Some(path) => write_atomic(path, table.as_bytes())?,
        None => stdout.write_all(table.as_bytes()).map_err(|source| CliError::Write {
            path: "<stdout>".into(),
            source,
        })?,
    }
    writeln!(
        stdout,
        "{},{},{:e},{:e}",
        summary.status, summary.iterations, summary.pri_res, summary.dua_res
    )
    .ok();
    Ok(match summary.status {
        TerminationStatus::Solved => EXIT_OK,
        _ => EXIT_MAX_ITERS,
    })
}

fn scenario(name: ScenarioName) -> Box<dyn Scenario> {
    match name {
        ScenarioName::SafetyFilter => Box::new(SafetyFilter::new(SafetyFilterConfig::default())),
        ScenarioName::Rocket => Box::new(RocketLanding::new(RocketConfig::default())),
        ScenarioName::Spiral => Box::new(SpiralLanding::new(SpiralConfig::default())),
    }
}

/// `out.csv` → `out.record.json`.
pub fn record_path(out: &Path) -> PathBuf {
    out.with_extension("record.json")
}

fn cmd_simulate(
    name: ScenarioName,
    steps: usize,
    budget: usize,
    cold_start: bool,
    seed: u64,
    out: &Path,
    stdout: &mut dyn Write,
) -> Result<i32, CliError> {
    if budget == 0 {
        return Err(CliError::Input("--budget: must be at least 1".into()));
    }
    let sc = scenario(name);
    let opts = ClosedLoopOptions {
        warm_start: !cold_start,
        seed,
        ..ClosedLoopOptions::new(steps, budget)
    };
    let run = run_closed_loop(sc.as_ref(), &sc.default_settings(), &opts)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let dims = sc.problem().dims();
    let mut csv = Vec::new();
    write_trajectory_csv(&run, dims.n, dims.m, &mut csv)
        .map_err(|e| CliError::Input(format!("trajectory: {e}")))?;
    write_atomic(out, &csv)?;
    let record = RunRecord::new(sc.as_ref(), &opts, &run).to_json();
    write_atomic(&record_path(out), format!("{record}\n").as_bytes())?;
    writeln!(stdout, "{record}").ok();
    Ok(EXIT_OK)
}

fn cmd_bench(
    suite: SuiteName,
    axis: SweepName,
    (lo, hi): (usize, usize),
    out: &Path,
    stdout: &mut dyn Write,
) -> Result<i32, CliError> {
    let suite = match suite {
        SuiteName::SafetyFilter => Suite::SafetyFilter,
        SuiteName::Rocket => Suite::Rocket,
    };
    let (axis, values): (_, Vec<usize>) = match axis {
        // state dimensions of stacked double integrators are even
        SweepName::State => (SweepAxis::State, (lo..=hi).filter(|v| v.is_multiple_of(2)).collect()),
        SweepName::Horizon => (SweepAxis::Horizon, (lo..=hi).collect()),
    };
    if values.is_empty() {
        return Err(CliError::Input("--range: no valid sweep values".into()));
    }
    let points =
        sweep(suite, axis, &values, 200, 11).map_err(|e| CliError::Input(format!("--range: {e}")))?;
    let mut text = String::from(
        "n,m,N,mean_iter_s,median_iter_s,max_iter_s,data_bytes,workspace_bytes\n",
    );
    for p in &points {
        text.push_str(&format!(
            "{},{},{},{:e},{:e},{:e},{},{}\n",
            p.n,
            p.m,
            p.horizon,
            p.timing.mean_seconds,
            p.timing.median_seconds,
            p.timing.max_seconds,
            p.data_bytes,
            p.workspace_bytes
        ));
    }
    write_atomic(out, text.as_bytes())?;
    writeln!(stdout, "{} points written to {}", points.len(), out.display()).ok();
    Ok(EXIT_OK)
}

fn cmd_codegen(
    problem_path: &Path,
    out: &Path,
    precision: Precision,
    stdout: &mut dyn Write,
) -> Result<i32, CliError> {
    let ProblemFile { problem, settings } = load_problem(problem_path)?;
    let cache = tinysocp::SolverCache::new(&problem, settings.rho)
        .map_err(|e| CliError::Input(format!("--problem: {e}")))?;
    let opts = CodegenOptions {
        precision,
        ..CodegenOptions::default()
    };
    let tree = generate(&problem, &cache, &settings, out, &opts).map_err(|e| match e {
        tinysocp_codegen::CodegenError::Io { path, source } => CliError::Write { path, source },
        other => CliError::Input(format!("--problem: {other}")),
    })?;
    let dims = problem.dims();
    writeln!(
        stdout,
        "n={} m={} N={} precision={} data_bytes={} workspace_bytes={} files={}",
        dims.n,
        dims.m,
        dims.horizon,
        precision.type_name(),
        tree.footprint.data_bytes,
        tree.footprint.workspace_bytes,
        tree.files.len()
    )
    .ok();
    Ok(EXIT_OK)
}
