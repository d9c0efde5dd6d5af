// SPDX-License-Identifier: Apache-2.0

//! The three system classes: continuous LTI plants, sampled-data systems
//! over a finite interval set, and discrete-time linear switched models
//! with a shared read-out map.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::{self, all_finite, Matrix};

/// Machine-readable invariant violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    Dimension,
    NonFinite,
    EmptyGrid,
    NonPositiveInterval,
    DuplicateInterval,
    NoModes,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let code = serde_json::to_value(self.code)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        write!(f, "[{code}] {}", self.detail)
    }
}

fn violation(code: ViolationCode, detail: impl Into<String>) -> Violation {
    Violation {
        code,
        detail: detail.into(),
    }
}

pub trait Validate {
    /// Every invariant violation; empty when the value is well formed.
    fn violations(&self) -> Vec<Violation>;

    fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }
}

fn check_finite(m: &Matrix, name: &str, out: &mut Vec<Violation>) {
    if !all_finite(m) {
        out.push(violation(
            ViolationCode::NonFinite,
            format!("{name} has non-finite entries"),
        ));
    }
}

fn check_shape(m: &Matrix, rows: usize, cols: usize, name: &str, out: &mut Vec<Violation>) {
    if m.shape() != (rows, cols) {
        out.push(violation(
            ViolationCode::Dimension,
            format!(
                "{name} is {}x{}, expected {rows}x{cols}",
                m.nrows(),
                m.ncols()
            ),
        ));
    }
}

/// `ẋ = Ax + Bu`, `y = Cx`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousLtiSystem {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
}

impl ContinuousLtiSystem {
    pub fn new(a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        let sys = Self { a, b, c };
        sys.validate()?;
        Ok(sys)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// Whether every eigenvalue of `A` has strictly negative real part,
    /// together with the spectral abscissa. Marginal systems are not Hurwitz.
    pub fn is_hurwitz(&self) -> Result<(bool, f64)> {
        let (abscissa, _) = matops::spectral_abscissa(&self.a)?;
        Ok((abscissa < 0.0, abscissa))
    }
}

impl Validate for ContinuousLtiSystem {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.a.nrows();
        if n == 0 {
            out.push(violation(ViolationCode::Dimension, "state dimension is zero"));
        }
        check_shape(&self.a, n, n, "A", &mut out);
        if self.b.nrows() != n || self.b.ncols() == 0 {
            out.push(violation(
                ViolationCode::Dimension,
                format!(
                    "B is {}x{}, expected {n}xm with m >= 1",
                    self.b.nrows(),
                    self.b.ncols()
                ),
            ));
        }
        if self.c.ncols() != n || self.c.nrows() == 0 {
            out.push(violation(
                ViolationCode::Dimension,
                format!(
                    "C is {}x{}, expected px{n} with p >= 1",
                    self.c.nrows(),
                    self.c.ncols()
                ),
            ));
        }
        check_finite(&self.a, "A", &mut out);
        check_finite(&self.b, "B", &mut out);
        check_finite(&self.c, "C", &mut out);
        out
    }
}

/// Finite set of admissible sampling intervals, kept sorted ascending.
/// Mode `i` of a discretized model always refers to `intervals()[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SamplingGrid {
    intervals: Vec<f64>,
}

impl SamplingGrid {
    /// Sorts the intervals; rejects the grid if any invariant fails.
    pub fn new(mut intervals: Vec<f64>) -> Result<Self> {
        intervals.sort_by(f64::total_cmp);
        let grid = Self { intervals };
        grid.validate()?;
        Ok(grid)
    }

    /// Sorted but unchecked, for reporting violations on raw input.
    pub fn new_unchecked(mut intervals: Vec<f64>) -> Self {
        intervals.sort_by(f64::total_cmp);
        Self { intervals }
    }

    pub fn intervals(&self) -> &[f64] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn interval(&self, mode: usize) -> f64 {
        self.intervals[mode]
    }

    pub fn mean(&self) -> f64 {
        self.intervals.iter().sum::<f64>() / self.intervals.len() as f64
    }
}

impl Validate for SamplingGrid {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.intervals.is_empty() {
            out.push(violation(ViolationCode::EmptyGrid, "sampling grid is empty"));
        }
        for (i, h) in self.intervals.iter().enumerate() {
            if !h.is_finite() {
                out.push(violation(
                    ViolationCode::NonFinite,
                    format!("interval {i} is not finite"),
                ));
            } else if *h <= 0.0 {
                out.push(violation(
                    ViolationCode::NonPositiveInterval,
                    format!("interval {i} = {h} is not strictly positive"),
                ));
            }
        }
        for w in self.intervals.windows(2) {
            if (w[1] - w[0]).abs() <= 1e-12 * w[0].abs().max(w[1].abs()) {
                out.push(violation(
                    ViolationCode::DuplicateInterval,
                    format!("interval {} appears more than once", w[0]),
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledDataSystem {
    pub plant: ContinuousLtiSystem,
    pub grid: SamplingGrid,
}

impl SampledDataSystem {
    pub fn new(plant: ContinuousLtiSystem, grid: SamplingGrid) -> Result<Self> {
        let sd = Self { plant, grid };
        sd.validate()?;
        Ok(sd)
    }
}

impl Validate for SampledDataSystem {
    fn violations(&self) -> Vec<Violation> {
        let mut out = self.plant.violations();
        out.extend(self.grid.violations());
        out
    }
}

/// One mode `(Â_i, B̂_i)` of a switched model.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub a: Matrix,
    pub b: Matrix,
}

/// `x_{k+1} = Â_{σ_k} x_k + B̂_{σ_k} u_k`, `y_k = C x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedLinearSystem {
    pub modes: Vec<Mode>,
    pub c: Matrix,
}

impl SwitchedLinearSystem {
    pub fn new(modes: Vec<Mode>, c: Matrix) -> Result<Self> {
        let sys = Self { modes, c };
        sys.validate()?;
        Ok(sys)
    }

    pub fn n(&self) -> usize {
        self.c.ncols()
    }
    pub fn m(&self) -> usize {
        self.modes.first().map_or(0, |md| md.b.ncols())
    }
    pub fn p(&self) -> usize {
        self.c.nrows()
    }
    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    /// All `B̂_j` side by side.
    pub fn stacked_inputs(&self) -> Matrix {
        let n = self.n();
        let m = self.m();
        let mut out = Matrix::zeros(n, m * self.modes.len());
        for (j, md) in self.modes.iter().enumerate() {
            out.view_mut((0, j * m), (n, m)).copy_from(&md.b);
        }
        out
    }
}

impl Validate for SwitchedLinearSystem {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.modes.is_empty() {
            out.push(violation(ViolationCode::NoModes, "switched system has no modes"));
        }
        let n = self.c.ncols();
        if n == 0 || self.c.nrows() == 0 {
            out.push(violation(
                ViolationCode::Dimension,
                format!("C is {}x{}", self.c.nrows(), self.c.ncols()),
            ));
        }
        check_finite(&self.c, "C", &mut out);
        let m = self.m();
        for (i, md) in self.modes.iter().enumerate() {
            check_shape(&md.a, n, n, &format!("A_{}", i + 1), &mut out);
            if md.b.nrows() != n || md.b.ncols() != m || m == 0 {
                out.push(violation(
                    ViolationCode::Dimension,
                    format!(
                        "B_{} is {}x{}, expected {n}x{m}",
                        i + 1,
                        md.b.nrows(),
                        md.b.ncols()
                    ),
                ));
            }
            check_finite(&md.a, "A_i", &mut out);
            check_finite(&md.b, "B_i", &mut out);
        }
        out
    }
}
