//! Emits a self-contained Rust solver tree for one problem: embedded data,
//! a fixed-size solver and an example entry point, plus a manifest.
//!
//! ```text
//! out/solver/tinysocp.rs      solver, dimensions as compile-time constants
//! out/src/data_workspace.rs   matrices, cache, bounds, cones, settings, defaults
//! out/src/main_example.rs     crate root; runs one solve
//! out/manifest.txt
//! ```
//!
//! The example builds with `rustc --edition 2021 -D warnings src/main_example.rs`.
//! At 64-bit precision the generated iteration reproduces the library's
//! [`tinysocp::solve`] bit for bit.

pub mod audit;

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use tinysocp::{Bounds, ConeSlice, References, Settings, SolverCache, ValidatedProblem};

pub const GENERATOR_VERSION: &str = concat!("tinysocp-codegen ", env!("CARGO_PKG_VERSION"));

pub const SOLVER_PATH: &str = "solver/tinysocp.rs";
pub const DATA_PATH: &str = "src/data_workspace.rs";
pub const MAIN_PATH: &str = "src/main_example.rs";
pub const MANIFEST_PATH: &str = "manifest.txt";

const SOLVER_SOURCE: &str = include_str!("../templates/solver.rs.in");
const MAIN_SOURCE: &str = include_str!("../templates/main_example.rs.in");

/// Bytes per cone table entry: start and length as two `u16`.
const CONE_ENTRY_BYTES: usize = 4;
/// `iter: u32` and `status: u32` at the end of the workspace.
const WORKSPACE_COUNTER_BYTES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl Precision {
    pub fn bytes(self) -> usize {
        match self {
            Precision::F32 => 4,
            Precision::F64 => 8,
        }
    }

    pub fn type_name(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f32" | "32" => Ok(Precision::F32),
            "f64" | "64" => Ok(Precision::F64),
            other => Err(format!("unknown precision `{other}` (expected f32 or f64)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodegenOptions {
    pub precision: Precision,
    /// Initial state baked into the data unit; zeros when absent.
    pub x0: Option<Vec<f64>>,
    /// References baked into the data unit; zeros when absent.
    pub references: Option<References>,
    /// Refuse to generate when the footprint estimate exceeds this many bytes.
    pub byte_budget: Option<usize>,
}

impl Default for CodegenOptions {
    fn default() -> Self {
        Self {
            precision: Precision::F32,
            x0: None,
            references: None,
            byte_budget: Some(2 << 20),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CodegenError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("estimated footprint of {needed} bytes exceeds the budget of {budget} bytes")]
    UnsupportedDimensions { needed: usize, budget: usize },
    #[error("{0}")]
    BadInput(String),
}

/// Closed-form byte counts for the generated tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Footprint {
    /// Embedded constant tables.
    pub data_bytes: usize,
    /// `size_of::<Workspace>()` of the generated solver.
    pub workspace_bytes: usize,
}

impl Footprint {
    pub fn total(&self) -> usize {
        self.data_bytes + self.workspace_bytes
    }
}

/// Byte counts from the declared layout, with `s` the scalar size and
/// `H` the horizon:
///
/// data = s·(A n² + B nm + c n + K mn + P n² + C1 m² + C2 n² + C3 m + C4 n
///        + Q n² + R m² + 2n [state box] + 2m [input box]
///        + x0 n + x_ref nH + u_ref m(H−1) + ρ, two tolerances)
///        + 4 per cone
///
/// workspace = s·(8 nH + 8 m(H−1) + n + m + 2) + 8
pub fn estimate_footprint(problem: &ValidatedProblem, precision: Precision) -> Footprint {
    let dims = problem.dims();
    let (n, m, h) = (dims.n, dims.m, dims.horizon);
    let s = precision.bytes();
    let cons = problem.constraints();
    let mut scalars = 4 * n * n + 2 * m * m + 2 * n * m + 2 * n + m;
    scalars += if cons.state_bounds.is_some() { 2 * n } else { 0 };
    scalars += if cons.input_bounds.is_some() { 2 * m } else { 0 };
    scalars += n + n * h + m * (h - 1) + 3;
    let cones = cons.state_cones.len() + cons.input_cones.len();
    let data_bytes = s * scalars + CONE_ENTRY_BYTES * cones;

    let workspace_scalars = 8 * n * h + 8 * m * (h - 1) + n + m + 2;
    Footprint {
        data_bytes,
        workspace_bytes: s * workspace_scalars + WORKSPACE_COUNTER_BYTES,
    }
}

/// In-memory generated tree; paths are relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedTree {
    pub files: Vec<(PathBuf, String)>,
    pub footprint: Footprint,
}

impl GeneratedTree {
    pub fn file(&self, rel: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(p, _)| p == Path::new(rel))
            .map(|(_, s)| s.as_str())
    }

    /// Writes every file through a sibling temporary and a rename, so a
    /// reader never sees a half-written file.
    pub fn write_to(&self, out_dir: &Path) -> Result<(), CodegenError> {
        for (rel, text) in &self.files {
            let path = out_dir.join(rel);
            let io_err = |source| CodegenError::Io {
                path: path.clone(),
                source,
            };
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(io_err)?;
            }
            let mut tmp = path.clone().into_os_string();
            tmp.push(".tmp");
            std::fs::write(&tmp, text).map_err(io_err)?;
            std::fs::rename(&tmp, &path).map_err(io_err)?;
        }
        Ok(())
    }
}

/// Renders the tree without touching the filesystem. Output is a pure
/// function of the inputs.
pub fn render(
    problem: &ValidatedProblem,
    cache: &SolverCache,
    settings: &Settings,
    options: &CodegenOptions,
) -> Result<GeneratedTree, CodegenError> {
    let dims = problem.dims();
    let footprint = estimate_footprint(problem, options.precision);
    if let Some(budget) = options.byte_budget {
        if footprint.total() > budget {
            return Err(CodegenError::UnsupportedDimensions {
                needed: footprint.total(),
                budget,
            });
        }
    }
    let cons = problem.constraints();
    if cons.state_cones.iter().chain(&cons.input_cones).any(|c| c.start + c.len > u16::MAX as usize) {
        return Err(CodegenError::BadInput("cone slices must fit in u16".into()));
    }
    if settings.max_iter > u32::MAX as usize {
        return Err(CodegenError::BadInput("max_iter does not fit in u32".into()));
    }
    let x0 = match &options.x0 {
        Some(v) if v.len() != dims.n => {
            return Err(CodegenError::BadInput(format!(
                "x0 has {} entries, expected {}",
                v.len(),
                dims.n
            )))
        }
        Some(v) => v.clone(),
        None => vec![0.0; dims.n],
    };
    let refs = match &options.references {
        Some(r) => {
            r.check(dims)
                .map_err(|e| CodegenError::BadInput(e.to_string()))?;
            r.clone()
        }
        None => References::zeros(dims),
    };

    let data = render_data(problem, cache, settings, &x0, &refs, options.precision);
    let manifest = render_manifest(problem, settings, options.precision, footprint);
    Ok(GeneratedTree {
        files: vec![
            (PathBuf::from(SOLVER_PATH), SOLVER_SOURCE.to_string()),
            (PathBuf::from(DATA_PATH), data),
            (PathBuf::from(MAIN_PATH), MAIN_SOURCE.to_string()),
            (PathBuf::from(MANIFEST_PATH), manifest),
        ],
        footprint,
    })
}

/// [`render`] followed by writing the files under `out_dir`.
pub fn generate(
    problem: &ValidatedProblem,
    cache: &SolverCache,
    settings: &Settings,
    out_dir: &Path,
    options: &CodegenOptions,
) -> Result<GeneratedTree, CodegenError> {
    let tree = render(problem, cache, settings, options)?;
    tree.write_to(out_dir)?;
    Ok(tree)
}

struct DataWriter {
    out: String,
    precision: Precision,
}

impl DataWriter {
    fn scalar(&self, v: f64) -> String {
        if v == f64::INFINITY {
            return "Float::INFINITY".into();
        }
        if v == f64::NEG_INFINITY {
            return "Float::NEG_INFINITY".into();
        }
        // Debug formatting is shortest round-trip; it always carries a '.' or
        // an exponent so the literal types as Float.
        match self.precision {
            Precision::F32 => format!("{:?}", v as f32),
            Precision::F64 => format!("{v:?}"),
        }
    }

    fn row(&self, values: impl IntoIterator<Item = f64>) -> String {
        let items: Vec<String> = values.into_iter().map(|v| self.scalar(v)).collect();
        format!("[{}]", items.join(", "))
    }

    fn vector(&mut self, name: &str, len: &str, values: &[f64]) {
        let row = self.row(values.iter().copied());
        writeln!(self.out, "pub const {name}: [Float; {len}] = {row};").unwrap();
    }

    fn rows(&mut self, name: &str, rows: &str, cols: &str, data: &[Vec<f64>]) {
        writeln!(self.out, "pub const {name}: [[Float; {cols}]; {rows}] = [").unwrap();
        for r in data {
            let row = self.row(r.iter().copied());
            writeln!(self.out, "    {row},").unwrap();
        }
        writeln!(self.out, "];").unwrap();
    }

    fn matrix(&mut self, name: &str, rows: &str, cols: &str, m: &DMatrix<f64>) {
        let data: Vec<Vec<f64>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect();
        self.rows(name, rows, cols, &data);
    }

    fn bounds(&mut self, name: &str, len: &str, bounds: Option<&Bounds>) {
        match bounds {
            None => {
                writeln!(self.out, "pub const {name}: Option<[[Float; {len}]; 2]> = None;").unwrap()
            }
            Some(b) => {
                let lo = self.row(b.lower.iter().copied());
                let hi = self.row(b.upper.iter().copied());
                writeln!(
                    self.out,
                    "pub const {name}: Option<[[Float; {len}]; 2]> = Some([\n    {lo},\n    {hi},\n]);"
                )
                .unwrap();
            }
        }
    }

    fn cones(&mut self, name: &str, cones: &[ConeSlice]) {
        let items: Vec<String> = cones
            .iter()
            .map(|c| format!("[{}, {}]", c.start, c.len))
            .collect();
        writeln!(
            self.out,
            "pub const {name}: [[u16; 2]; {}] = [{}];",
            cones.len(),
            items.join(", ")
        )
        .unwrap();
    }
}

fn render_data(
    problem: &ValidatedProblem,
    cache: &SolverCache,
    settings: &Settings,
    x0: &[f64],
    refs: &References,
    precision: Precision,
) -> String {
    let dims = problem.dims();
    let dynamics = problem.dynamics();
    let cost = problem.cost();
    let cons = problem.constraints();
    let mut w = DataWriter {
        out: String::new(),
        precision,
    };
    w.out.push_str("//! Embedded problem data, cached Riccati terms and settings.\n");
    w.out.push_str("#![allow(dead_code)]\n\n");
    writeln!(w.out, "pub type Float = {};\n", precision.type_name()).unwrap();
    writeln!(w.out, "pub const NX: usize = {};", dims.n).unwrap();
    writeln!(w.out, "pub const NU: usize = {};", dims.m).unwrap();
    writeln!(w.out, "pub const NH: usize = {};", dims.horizon).unwrap();
    w.out.push_str("pub const NU_STAGES: usize = NH - 1;\n\n");

    writeln!(w.out, "pub const RHO: Float = {};", w.scalar(cache.rho)).unwrap();
    writeln!(w.out, "pub const ABS_PRI_TOL: Float = {};", w.scalar(settings.abs_pri_tol)).unwrap();
    writeln!(w.out, "pub const ABS_DUA_TOL: Float = {};", w.scalar(settings.abs_dua_tol)).unwrap();
    writeln!(w.out, "pub const MAX_ITER: u32 = {};", settings.max_iter).unwrap();
    writeln!(w.out, "pub const CHECK_ENABLED: bool = {};", settings.check_termination > 0).unwrap();
    writeln!(w.out, "pub const CHECK_EVERY: u32 = {};", settings.check_termination.max(1)).unwrap();
    writeln!(w.out, "pub const EN_STATE_BOUND: bool = {};", settings.en_state_bound).unwrap();
    writeln!(w.out, "pub const EN_INPUT_BOUND: bool = {};", settings.en_input_bound).unwrap();
    writeln!(w.out, "pub const EN_STATE_SOC: bool = {};", settings.en_state_soc).unwrap();
    writeln!(w.out, "pub const EN_INPUT_SOC: bool = {};\n", settings.en_input_soc).unwrap();

    w.matrix("A", "NX", "NX", &dynamics.a);
    w.matrix("B", "NX", "NU", &dynamics.b);
    w.vector("C", "NX", dynamics.c.as_slice());
    w.matrix("Q", "NX", "NX", &cost.q);
    w.matrix("R", "NU", "NU", &cost.r);
    w.out.push('\n');
    w.matrix("KINF", "NU", "NX", &cache.kinf);
    w.matrix("PINF", "NX", "NX", &cache.pinf);
    w.matrix("C1", "NU", "NU", &cache.c1);
    w.matrix("C2", "NX", "NX", &cache.c2);
    w.vector("C3", "NU", cache.c3.as_slice());
    w.vector("C4", "NX", cache.c4.as_slice());
    w.out.push('\n');
    w.bounds("STATE_BOUNDS", "NX", cons.state_bounds.as_ref());
    w.bounds("INPUT_BOUNDS", "NU", cons.input_bounds.as_ref());
    w.cones("STATE_CONES", &cons.state_cones);
    w.cones("INPUT_CONES", &cons.input_cones);
    w.out.push('\n');
    w.vector("X0", "NX", x0);
    w.rows("X_REF", "NH", "NX", &refs.x_ref.to_rows());
    w.rows("U_REF", "NU_STAGES", "NU", &refs.u_ref.to_rows());
    w.out
}

fn render_manifest(
    problem: &ValidatedProblem,
    settings: &Settings,
    precision: Precision,
    footprint: Footprint,
) -> String {
    let dims = problem.dims();
    let cons = problem.constraints();
    let mut m = String::new();
    writeln!(m, "generator: {GENERATOR_VERSION}").unwrap();
    writeln!(m, "n: {}", dims.n).unwrap();
    writeln!(m, "m: {}", dims.m).unwrap();
    writeln!(m, "horizon: {}", dims.horizon).unwrap();
    writeln!(m, "precision: {}", precision.type_name()).unwrap();
    writeln!(m, "rho: {:?}", settings.rho).unwrap();
    writeln!(m, "max_iter: {}", settings.max_iter).unwrap();
    writeln!(m, "check_termination: {}", settings.check_termination).unwrap();
    writeln!(m, "state_bounds: {}", cons.state_bounds.is_some()).unwrap();
    writeln!(m, "input_bounds: {}", cons.input_bounds.is_some()).unwrap();
    writeln!(m, "state_cones: {}", cons.state_cones.len()).unwrap();
    writeln!(m, "input_cones: {}", cons.input_cones.len()).unwrap();
    writeln!(m, "data_bytes: {}", footprint.data_bytes).unwrap();
    writeln!(m, "workspace_bytes: {}", footprint.workspace_bytes).unwrap();
    m.push_str(
        "data_formula: s*(4n^2 + 2m^2 + 2nm + 2n + m + 2n[state box] + 2m[input box] \
         + n + nH + m(H-1) + 3) + 4*cones\n",
    );
    m.push_str("workspace_formula: s*(8nH + 8m(H-1) + n + m + 2) + 8\n");
    writeln!(m, "files: {SOLVER_PATH} {DATA_PATH} {MAIN_PATH}").unwrap();
    writeln!(m, "build: rustc --edition 2021 -D warnings -O {MAIN_PATH}").unwrap();
    m
}
