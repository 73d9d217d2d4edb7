//! Problem data model: dimensions, dynamics, costs, constraints, settings
//! and the references that drive the linear cost terms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::stages::Stages;

/// Relative asymmetry tolerated in `Q` and `R` before they are rejected.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemDims {
    /// State dimension.
    pub n: usize,
    /// Input dimension.
    pub m: usize,
    /// Number of knot points. States live on `0..horizon`, inputs on `0..horizon - 1`.
    pub horizon: usize,
}

impl ProblemDims {
    pub fn new(n: usize, m: usize, horizon: usize) -> Self {
        Self { n, m, horizon }
    }
}

/// `x[k+1] = A x[k] + B u[k] + c`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDynamics {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DVector<f64>,
}

/// Quadratic stage weights. The terminal weight is always the cached
/// infinite-horizon cost-to-go, so no separate terminal matrix exists.
#[derive(Debug, Clone, PartialEq)]
pub struct CostData {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

/// Elementwise bounds; infinite entries make the bound one-sided or absent.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl Bounds {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Self {
        Self { lower, upper }
    }

    pub fn symmetric(limit: &[f64]) -> Self {
        Self {
            lower: DVector::from_iterator(limit.len(), limit.iter().map(|v| -v)),
            upper: DVector::from_column_slice(limit),
        }
    }

    /// True if either side of index `i` is finite.
    pub fn is_active(&self, i: usize) -> bool {
        self.lower[i].is_finite() || self.upper[i].is_finite()
    }
}

/// A contiguous slice of a state or input vector constrained to the
/// standard second-order cone. The last element of the slice is the apex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConeSlice {
    pub start: usize,
    pub len: usize,
}

impl ConeSlice {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }

    pub fn apex(&self) -> usize {
        self.start + self.len - 1
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSet {
    pub state_bounds: Option<Bounds>,
    pub input_bounds: Option<Bounds>,
    pub state_cones: Vec<ConeSlice>,
    pub input_cones: Vec<ConeSlice>,
}

impl ConstraintSet {
    pub fn is_empty(&self) -> bool {
        self.state_bounds.is_none()
            && self.input_bounds.is_none()
            && self.state_cones.is_empty()
            && self.input_cones.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub rho: f64,
    pub abs_pri_tol: f64,
    pub abs_dua_tol: f64,
    pub max_iter: usize,
    /// Residuals are evaluated every `check_termination` iterations; 0 disables checks.
    pub check_termination: usize,
    pub en_state_bound: bool,
    pub en_input_bound: bool,
    pub en_state_soc: bool,
    pub en_input_soc: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            rho: 1.0,
            abs_pri_tol: 1e-3,
            abs_dua_tol: 1e-3,
            max_iter: 500,
            check_termination: 10,
            en_state_bound: true,
            en_input_bound: true,
            en_state_soc: true,
            en_input_soc: true,
        }
    }
}

impl Settings {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.rho) {
            return Err(ValidationError::InvalidSetting { field: "rho" });
        }
        if !positive(self.abs_pri_tol) {
            return Err(ValidationError::InvalidSetting { field: "abs_pri_tol" });
        }
        if !positive(self.abs_dua_tol) {
            return Err(ValidationError::InvalidSetting { field: "abs_dua_tol" });
        }
        if self.max_iter == 0 {
            return Err(ValidationError::InvalidSetting { field: "max_iter" });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemDefinition {
    pub dims: ProblemDims,
    pub dynamics: LinearDynamics,
    pub cost: CostData,
    pub constraints: ConstraintSet,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("invalid dimensions: {0}")]
    InvalidDims(&'static str),
    #[error("dimension mismatch in `{field}`: expected {expected}, found {found}")]
    DimensionMismatch {
        field: &'static str,
        expected: String,
        found: String,
    },
    #[error("non-finite entry in `{field}`")]
    NonFiniteEntry { field: &'static str },
    #[error("`{field}` is not symmetric")]
    NotSymmetric { field: &'static str },
    #[error("Q is not positive semidefinite")]
    QNotPositiveSemidefinite,
    #[error("R is not positive definite")]
    RNotPositiveDefinite,
    #[error("bounds inverted in `{field}` at index {index}")]
    BoundsInverted { field: &'static str, index: usize },
    #[error("cone slice {{start: {start}, len: {len}}} in `{field}` is invalid for dimension {dim}")]
    InvalidCone {
        field: &'static str,
        start: usize,
        len: usize,
        dim: usize,
    },
    #[error("cone overlap in `{field}` at index {index}")]
    ConeOverlap { field: &'static str, index: usize },
    #[error("invalid setting `{field}`")]
    InvalidSetting { field: &'static str },
}

impl ValidationError {
    /// Name of the violated invariant.
    pub fn name(&self) -> &'static str {
        match self {
            Self::InvalidDims(_) => "InvalidDims",
            Self::DimensionMismatch { .. } => "DimensionMismatch",
            Self::NonFiniteEntry { .. } => "NonFiniteEntry",
            Self::NotSymmetric { .. } => "NotSymmetric",
            Self::QNotPositiveSemidefinite => "QNotPositiveSemidefinite",
            Self::RNotPositiveDefinite => "RNotPositiveDefinite",
            Self::BoundsInverted { .. } => "BoundsInverted",
            Self::InvalidCone { .. } => "InvalidCone",
            Self::ConeOverlap { .. } => "ConeOverlap",
            Self::InvalidSetting { .. } => "InvalidSetting",
        }
    }
}

/// A problem whose invariants have been checked. `Q` and `R` are exactly
/// symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedProblem {
    inner: ProblemDefinition,
}

impl ValidatedProblem {
    pub fn dims(&self) -> ProblemDims {
        self.inner.dims
    }

    pub fn dynamics(&self) -> &LinearDynamics {
        &self.inner.dynamics
    }

    pub fn cost(&self) -> &CostData {
        &self.inner.cost
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.inner.constraints
    }

    pub fn definition(&self) -> &ProblemDefinition {
        &self.inner
    }

    pub fn into_definition(self) -> ProblemDefinition {
        self.inner
    }
}

fn check_shape(
    field: &'static str,
    rows: usize,
    cols: usize,
    want_rows: usize,
    want_cols: usize,
) -> Result<(), ValidationError> {
    if rows == want_rows && cols == want_cols {
        Ok(())
    } else {
        Err(ValidationError::DimensionMismatch {
            field,
            expected: format!("{want_rows}x{want_cols}"),
            found: format!("{rows}x{cols}"),
        })
    }
}

fn check_finite<'a>(
    field: &'static str,
    values: impl IntoIterator<Item = &'a f64>,
) -> Result<(), ValidationError> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ValidationError::NonFiniteEntry { field })
    }
}

fn symmetrized(field: &'static str, m: &DMatrix<f64>) -> Result<DMatrix<f64>, ValidationError> {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(ValidationError::NotSymmetric { field });
    }
    Ok((m + m.transpose()) * 0.5)
}

fn check_bounds(field: &'static str, bounds: &Bounds, dim: usize) -> Result<(), ValidationError> {
    check_shape(field, bounds.lower.len(), 1, dim, 1)?;
    check_shape(field, bounds.upper.len(), 1, dim, 1)?;
    for (i, (lo, hi)) in bounds.lower.iter().zip(bounds.upper.iter()).enumerate() {
        if lo.is_nan() || hi.is_nan() {
            return Err(ValidationError::NonFiniteEntry { field });
        }
        if lo > hi {
            return Err(ValidationError::BoundsInverted { field, index: i });
        }
    }
    Ok(())
}

fn check_cones(
    field: &'static str,
    cones: &[ConeSlice],
    bounds: Option<&Bounds>,
    dim: usize,
) -> Result<(), ValidationError> {
    let mut owner = vec![false; dim];
    for cone in cones {
        let end = cone.start.checked_add(cone.len);
        if cone.len < 2 || end.is_none_or(|e| e > dim) {
            return Err(ValidationError::InvalidCone {
                field,
                start: cone.start,
                len: cone.len,
                dim,
            });
        }
        for i in cone.range() {
            if owner[i] || bounds.is_some_and(|b| b.is_active(i)) {
                return Err(ValidationError::ConeOverlap { field, index: i });
            }
            owner[i] = true;
        }
    }
    Ok(())
}

/// Checks every invariant of the data model and returns a validated copy
/// with symmetrized cost matrices. Errors report the first violation found.
pub fn validate(problem: &ProblemDefinition) -> Result<ValidatedProblem, ValidationError> {
    let ProblemDims { n, m, horizon } = problem.dims;
    if n == 0 {
        return Err(ValidationError::InvalidDims("n must be at least 1"));
    }
    if m == 0 {
        return Err(ValidationError::InvalidDims("m must be at least 1"));
    }
    if horizon < 2 {
        return Err(ValidationError::InvalidDims("N must be at least 2"));
    }

    let dynamics = &problem.dynamics;
    check_shape("dynamics.A", dynamics.a.nrows(), dynamics.a.ncols(), n, n)?;
    check_shape("dynamics.B", dynamics.b.nrows(), dynamics.b.ncols(), n, m)?;
    check_shape("dynamics.c", dynamics.c.len(), 1, n, 1)?;
    check_finite("dynamics.A", dynamics.a.iter())?;
    check_finite("dynamics.B", dynamics.b.iter())?;
    check_finite("dynamics.c", dynamics.c.iter())?;

    let cost = &problem.cost;
    check_shape("cost.Q", cost.q.nrows(), cost.q.ncols(), n, n)?;
    check_shape("cost.R", cost.r.nrows(), cost.r.ncols(), m, m)?;
    check_finite("cost.Q", cost.q.iter())?;
    check_finite("cost.R", cost.r.iter())?;
    let q = symmetrized("cost.Q", &cost.q)?;
    let r = symmetrized("cost.R", &cost.r)?;

    let q_scale = q.amax().max(1.0);
    let min_eig = SymmetricEigen::new(q.clone()).eigenvalues.min();
    if min_eig < -1e-12 * q_scale {
        return Err(ValidationError::QNotPositiveSemidefinite);
    }
    match r.clone().cholesky() {
        Some(chol) if chol.l_dirty().diagonal().iter().all(|d| *d > 0.0) => {}
        _ => return Err(ValidationError::RNotPositiveDefinite),
    }

    let cons = &problem.constraints;
    if let Some(b) = &cons.state_bounds {
        check_bounds("constraints.x_min/x_max", b, n)?;
    }
    if let Some(b) = &cons.input_bounds {
        check_bounds("constraints.u_min/u_max", b, m)?;
    }
    check_cones(
        "constraints.state_cones",
        &cons.state_cones,
        cons.state_bounds.as_ref(),
        n,
    )?;
    check_cones(
        "constraints.input_cones",
        &cons.input_cones,
        cons.input_bounds.as_ref(),
        m,
    )?;

    Ok(ValidatedProblem {
        inner: ProblemDefinition {
            dims: problem.dims,
            dynamics: dynamics.clone(),
            cost: CostData { q, r },
            constraints: cons.clone(),
        },
    })
}

/// State and input references over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct References {
    pub x_ref: Stages,
    pub u_ref: Stages,
}

impl References {
    pub fn zeros(dims: ProblemDims) -> Self {
        Self {
            x_ref: Stages::zeros(dims.n, dims.horizon),
            u_ref: Stages::zeros(dims.m, dims.horizon - 1),
        }
    }

    pub fn check(&self, dims: ProblemDims) -> Result<(), ValidationError> {
        check_shape("x_ref", self.x_ref.len(), self.x_ref.dim(), dims.horizon, dims.n)?;
        check_shape("u_ref", self.u_ref.len(), self.u_ref.dim(), dims.horizon - 1, dims.m)?;
        check_finite("x_ref", self.x_ref.as_slice())?;
        check_finite("u_ref", self.u_ref.as_slice())?;
        Ok(())
    }
}

/// Linear cost vectors `q[k]` (states) and `r[k]` (inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCost {
    pub q: Stages,
    pub r: Stages,
}

impl LinearCost {
    pub fn zeros(dims: ProblemDims) -> Self {
        Self {
            q: Stages::zeros(dims.n, dims.horizon),
            r: Stages::zeros(dims.m, dims.horizon - 1),
        }
    }

    /// Tracking-cost completion of the references; see [`refs_to_linear_cost`].
    pub fn from_references(
        problem: &ValidatedProblem,
        terminal: &DMatrix<f64>,
        refs: &References,
    ) -> Self {
        let mut out = Self::zeros(problem.dims());
        refs_to_linear_cost(problem, terminal, refs, &mut out);
        out
    }
}

/// `q[k] = -Q x_ref[k]`, `q[N-1] = -P x_ref[N-1]` with `P` the terminal
/// weight, and `r[k] = -R u_ref[k]`. Writes into `out` without allocating.
pub fn refs_to_linear_cost(
    problem: &ValidatedProblem,
    terminal: &DMatrix<f64>,
    refs: &References,
    out: &mut LinearCost,
) {
    let ProblemDims { n, m, horizon } = problem.dims();
    let cost = problem.cost();
    for k in 0..horizon {
        let weight = if k + 1 == horizon { terminal } else { &cost.q };
        let xr = refs.x_ref.stage(k);
        let q = out.q.stage_mut(k);
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += weight[(i, j)] * xr[j];
            }
            q[i] = -acc;
        }
    }
    for k in 0..horizon - 1 {
        let ur = refs.u_ref.stage(k);
        let r = out.r.stage_mut(k);
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..m {
                acc += cost.r[(i, j)] * ur[j];
            }
            r[i] = -acc;
        }
    }
}
