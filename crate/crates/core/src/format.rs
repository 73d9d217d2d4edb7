//! Problem definition files (`tinysocp-problem-v1`), reference files and
//! comma-separated vectors.
//!
//! ```json
//! {
//!   "schema": "tinysocp-problem-v1",
//!   "dims": { "n": 2, "m": 1, "N": 10 },
//!   "dynamics": { "A": [[1, 0.05], [0, 1]], "B": [[0.00125], [0.05]], "c": [0, 0] },
//!   "cost": { "Q": [[1, 0], [0, 1]], "R": [[1]] },
//!   "constraints": { "u_min": [-0.5], "u_max": [0.5], "x_max": ["inf", 2] },
//!   "settings": { "rho": 1.0, "max_iter": 500 }
//! }
//! ```
//!
//! Missing constraint keys mean unconstrained; bounds accept `"inf"` and
//! `"-inf"`. Unknown keys are rejected.

use nalgebra::{DMatrix, DVector};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::problem::{
    validate, Bounds, ConeSlice, ConstraintSet, CostData, LinearDynamics, ProblemDefinition,
    ProblemDims, References, Settings, ValidatedProblem, ValidationError,
};
use crate::stages::Stages;

pub const SCHEMA: &str = "tinysocp-problem-v1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("`{path}`: {message}")]
    Syntax { path: String, message: String },
    #[error("`{path}`: {message}")]
    Shape { path: String, message: String },
    #[error("`schema`: unsupported schema `{0}`, expected `{SCHEMA}`")]
    Schema(String),
    #[error("{0}")]
    Invalid(#[from] ValidationError),
}

/// A bound entry: a number or one of the strings `inf`, `+inf`, `-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct BoundValue(f64);

impl<'de> Deserialize<'de> for BoundValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = BoundValue;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or \"inf\" / \"-inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<BoundValue, E> {
                Ok(BoundValue(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<BoundValue, E> {
                Ok(BoundValue(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<BoundValue, E> {
                Ok(BoundValue(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<BoundValue, E> {
                match v.trim() {
                    "inf" | "+inf" | "infinity" | "+infinity" => Ok(BoundValue(f64::INFINITY)),
                    "-inf" | "-infinity" => Ok(BoundValue(f64::NEG_INFINITY)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

impl Serialize for BoundValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            v if v == f64::INFINITY => s.serialize_str("inf"),
            v if v == f64::NEG_INFINITY => s.serialize_str("-inf"),
            v => s.serialize_f64(v),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DimsRepr {
    n: usize,
    m: usize,
    #[serde(rename = "N")]
    horizon: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DynamicsRepr {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostRepr {
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    r: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConeRepr {
    start: usize,
    len: usize,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintsRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x_min: Option<Vec<BoundValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x_max: Option<Vec<BoundValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    u_min: Option<Vec<BoundValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    u_max: Option<Vec<BoundValue>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    state_cones: Vec<ConeRepr>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    input_cones: Vec<ConeRepr>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SettingsRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    abs_pri_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    abs_dua_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    check_termination: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    en_state_bound: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    en_input_bound: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    en_state_soc: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    en_input_soc: Option<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schema: Option<String>,
    dims: DimsRepr,
    dynamics: DynamicsRepr,
    cost: CostRepr,
    #[serde(default)]
    constraints: ConstraintsRepr,
    #[serde(default)]
    settings: SettingsRepr,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferencesRepr {
    #[serde(default)]
    x_ref: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    u_ref: Option<Vec<Vec<f64>>>,
}

/// A parsed and validated problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub problem: ValidatedProblem,
    pub settings: Settings,
}

fn from_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, FormatError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        // serde_json appends " at line L column C"; keep it, it helps locate the key
        FormatError::Syntax {
            path: if path == "." { "<root>".into() } else { path },
            message: inner.to_string(),
        }
    })
}

fn matrix(path: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, FormatError> {
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(FormatError::Shape {
            path: format!("{path}[{bad}]"),
            message: format!("row has {} entries, expected {ncols}", rows[bad].len()),
        });
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

fn bounds(
    lower: Option<&[BoundValue]>,
    upper: Option<&[BoundValue]>,
    dim: usize,
) -> Option<Bounds> {
    if lower.is_none() && upper.is_none() {
        return None;
    }
    let side = |v: Option<&[BoundValue]>, fill: f64| match v {
        Some(vals) => DVector::from_iterator(vals.len(), vals.iter().map(|b| b.0)),
        None => DVector::from_element(dim, fill),
    };
    Some(Bounds::new(
        side(lower, f64::NEG_INFINITY),
        side(upper, f64::INFINITY),
    ))
}

/// Parses and validates a problem file.
pub fn parse_problem(text: &str) -> Result<ProblemFile, FormatError> {
    let repr: ProblemRepr = from_json(text)?;
    if let Some(schema) = &repr.schema {
        if schema != SCHEMA {
            return Err(FormatError::Schema(schema.clone()));
        }
    }
    let dims = ProblemDims::new(repr.dims.n, repr.dims.m, repr.dims.horizon);
    let c = match &repr.dynamics.c {
        Some(c) => DVector::from_column_slice(c),
        None => DVector::zeros(dims.n),
    };
    let cons = &repr.constraints;
    let cones = |v: &[ConeRepr]| v.iter().map(|c| ConeSlice::new(c.start, c.len)).collect();
    let definition = ProblemDefinition {
        dims,
        dynamics: LinearDynamics {
            a: matrix("dynamics.A", &repr.dynamics.a)?,
            b: matrix("dynamics.B", &repr.dynamics.b)?,
            c,
        },
        cost: CostData {
            q: matrix("cost.Q", &repr.cost.q)?,
            r: matrix("cost.R", &repr.cost.r)?,
        },
        constraints: ConstraintSet {
            state_bounds: bounds(cons.x_min.as_deref(), cons.x_max.as_deref(), dims.n),
            input_bounds: bounds(cons.u_min.as_deref(), cons.u_max.as_deref(), dims.m),
            state_cones: cones(&cons.state_cones),
            input_cones: cones(&cons.input_cones),
        },
    };
    let s = &repr.settings;
    let d = Settings::default();
    let settings = Settings {
        rho: s.rho.unwrap_or(d.rho),
        abs_pri_tol: s.abs_pri_tol.unwrap_or(d.abs_pri_tol),
        abs_dua_tol: s.abs_dua_tol.unwrap_or(d.abs_dua_tol),
        max_iter: s.max_iter.unwrap_or(d.max_iter),
        check_termination: s.check_termination.unwrap_or(d.check_termination),
        en_state_bound: s.en_state_bound.unwrap_or(d.en_state_bound),
        en_input_bound: s.en_input_bound.unwrap_or(d.en_input_bound),
        en_state_soc: s.en_state_soc.unwrap_or(d.en_state_soc),
        en_input_soc: s.en_input_soc.unwrap_or(d.en_input_soc),
    };
    let problem = validate(&definition)?;
    settings.validate()?;
    Ok(ProblemFile { problem, settings })
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn bound_side(b: &Option<Bounds>, lower: bool) -> Option<Vec<BoundValue>> {
    b.as_ref().map(|b| {
        let v = if lower { &b.lower } else { &b.upper };
        v.iter().map(|x| BoundValue(*x)).collect()
    })
}

/// Renders a problem file that [`parse_problem`] reads back unchanged.
pub fn problem_to_json(problem: &ProblemDefinition, settings: &Settings) -> String {
    let cons = &problem.constraints;
    let cones = |v: &[ConeSlice]| {
        v.iter()
            .map(|c| ConeRepr {
                start: c.start,
                len: c.len,
            })
            .collect()
    };
    let repr = ProblemRepr {
        schema: Some(SCHEMA.to_string()),
        dims: DimsRepr {
            n: problem.dims.n,
            m: problem.dims.m,
            horizon: problem.dims.horizon,
        },
        dynamics: DynamicsRepr {
            a: rows(&problem.dynamics.a),
            b: rows(&problem.dynamics.b),
            c: Some(problem.dynamics.c.iter().copied().collect()),
        },
        cost: CostRepr {
            q: rows(&problem.cost.q),
            r: rows(&problem.cost.r),
        },
        constraints: ConstraintsRepr {
            x_min: bound_side(&cons.state_bounds, true),
            x_max: bound_side(&cons.state_bounds, false),
            u_min: bound_side(&cons.input_bounds, true),
            u_max: bound_side(&cons.input_bounds, false),
            state_cones: cones(&cons.state_cones),
            input_cones: cones(&cons.input_cones),
        },
        settings: SettingsRepr {
            rho: Some(settings.rho),
            abs_pri_tol: Some(settings.abs_pri_tol),
            abs_dua_tol: Some(settings.abs_dua_tol),
            max_iter: Some(settings.max_iter),
            check_termination: Some(settings.check_termination),
            en_state_bound: Some(settings.en_state_bound),
            en_input_bound: Some(settings.en_input_bound),
            en_state_soc: Some(settings.en_state_soc),
            en_input_soc: Some(settings.en_input_soc),
        },
    };
    serde_json::to_string_pretty(&repr).expect("problem serializes")
}

fn stage_rows(
    path: &str,
    rows: Option<Vec<Vec<f64>>>,
    dim: usize,
    len: usize,
) -> Result<Stages, FormatError> {
    let Some(rows) = rows else {
        return Ok(Stages::zeros(dim, len));
    };
    let shape_err = |message: String| FormatError::Shape {
        path: path.to_string(),
        message,
    };
    let stages = Stages::from_rows(&rows)
        .ok_or_else(|| shape_err("rows have different lengths".into()))?;
    if stages.dim() != dim && !stages.is_empty() {
        return Err(shape_err(format!("rows have {} entries, expected {dim}", stages.dim())));
    }
    match stages.len() {
        1 => Ok(Stages::repeat(stages.stage(0), len)),
        l if l == len => Ok(stages),
        l => Err(shape_err(format!("{l} rows, expected {len} or 1"))),
    }
}

/// Parses `{"x_ref": [[..], ..], "u_ref": [[..], ..]}`. Either key may be
/// omitted (zero reference); a single row is repeated over the horizon.
pub fn parse_references(text: &str, dims: ProblemDims) -> Result<References, FormatError> {
    let repr: ReferencesRepr = from_json(text)?;
    let refs = References {
        x_ref: stage_rows("x_ref", repr.x_ref, dims.n, dims.horizon)?,
        u_ref: stage_rows("u_ref", repr.u_ref, dims.m, dims.horizon - 1)?,
    };
    refs.check(dims)?;
    Ok(refs)
}

/// Parses `"1, -2.5, 3e-2"` into exactly `expected` finite values.
pub fn parse_vector_list(text: &str, expected: usize) -> Result<Vec<f64>, FormatError> {
    let err = |message: String| FormatError::Syntax {
        path: "x0".into(),
        message,
    };
    let values = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("`{s}` is not a finite number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != expected {
        return Err(err(format!("{} values given, expected {expected}", values.len())));
    }
    Ok(values)
}
