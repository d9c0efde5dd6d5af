// SPDX-License-Identifier: Apache-2.0

//! The two reduction routes for a sampled-data system.
//!
//! Approach one reduces the continuous plant by moment matching and then
//! discretizes the reduced plant over the grid. Approach two discretizes
//! first and reduces the resulting switched model.

use std::time::Instant;

use serde::Serialize;

use crate::discretize::build_switched_model;
use crate::error::{Error, Result};
use crate::matops::{Matrix, DEFAULT_RANK_TOL};
use crate::mm_lti::{
    markov_parameters_lti, reachability_levels_lti, reduce_lti, relative_residual, LeftInverseKind,
    ProjectionReduction, ReductionRequest,
};
use crate::mm_ls::{
    markov_count, markov_parameters_ls, markov_residuals_by_length, reachability_levels_ls, reduce_ls,
    DEFAULT_MARKOV_CAP,
};
use crate::stability::{
    certify_reduction, check_quadratic_stability, lyapunov_from_plant, stability_preserving_left_inverse,
    QuadraticStability, StabilityCertificate,
};
use crate::systems::{ContinuousLtiSystem, SampledDataSystem, SamplingGrid, SwitchedLinearSystem, Validate};

/// Largest Markov residual accepted for lengths up to the horizon.
pub const MARKOV_MATCH_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeftInverseChoice {
    /// Weighted inverse when the plant is Hurwitz, pseudoinverse otherwise.
    #[default]
    Auto,
    Pseudoinverse,
    /// Weighted inverse; fails for a plant that is not Hurwitz.
    StabilityPreserving,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub approach: Approach,
    pub n: usize,
    pub r: usize,
    /// Matched horizon `N`.
    pub horizon: usize,
    pub d: usize,
    pub grid: SamplingGrid,
    pub left_inverse_kind: LeftInverseKind,
    pub certificate: Option<StabilityCertificate>,
    /// Largest relative residual per Markov index (approach one) or word
    /// length (approach two), for `0 … N`.
    pub markov_match_residuals: Vec<f64>,
    pub reachability_dims: Vec<usize>,
    pub saturated: bool,
    pub notices: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub timings: Vec<StageTiming>,
}

impl ReductionReport {
    pub fn to_json(&self, include_timings: bool) -> String {
        let mut copy = self.clone();
        if !include_timings {
            copy.timings.clear();
        }
        serde_json::to_string_pretty(&copy).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub system: SwitchedLinearSystem,
    pub projection: ProjectionReduction,
    /// Reduced continuous plant (approach one only).
    pub reduced_plant: Option<ContinuousLtiSystem>,
    pub report: ReductionReport,
}

struct Stopwatch {
    last: Instant,
    out: Vec<StageTiming>,
}

impl Stopwatch {
    fn new() -> Self {
        Self {
            last: Instant::now(),
            out: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.out.push(StageTiming {
            stage,
            seconds: (now - self.last).as_secs_f64(),
        });
        self.last = now;
    }
}

/// Resolves the left-inverse choice; returns the plant Lyapunov matrix when
/// the weighted inverse is to be used.
fn resolve_inverse(plant: &ContinuousLtiSystem, choice: LeftInverseChoice) -> Result<(bool, Option<Matrix>)> {
    let (hurwitz, _) = plant.is_hurwitz()?;
    let p = match (choice, hurwitz) {
        (LeftInverseChoice::Pseudoinverse, _) | (LeftInverseChoice::Auto, false) => None,
        (_, true) => Some(lyapunov_from_plant(plant)?),
        (LeftInverseChoice::StabilityPreserving, false) => {
            // reports the offending eigenvalue
            lyapunov_from_plant(plant)?;
            unreachable!("Lyapunov solve succeeded for a non-Hurwitz plant")
        }
    };
    Ok((hurwitz, p))
}

/// A full-dimensional space is projected with `V = Vinv = I`, which is
/// both left inverses at once and keeps the model bit-for-bit.
fn projection(v: Matrix, horizon: usize, p: Option<&Matrix>) -> Result<ProjectionReduction> {
    let n = v.nrows();
    if v.ncols() == n {
        let kind = match p {
            Some(_) => LeftInverseKind::LyapunovWeighted,
            None => LeftInverseKind::Pseudoinverse,
        };
        return ProjectionReduction::new(Matrix::identity(n, n), Matrix::identity(n, n), horizon, kind);
    }
    match p {
        Some(p) => {
            let w = stability_preserving_left_inverse(&v, p)?;
            ProjectionReduction::new(v, w, horizon, LeftInverseKind::LyapunovWeighted)
        }
        None => ProjectionReduction::orthonormal(v, horizon),
    }
}

const NO_CERTIFICATE: &str = "no certificate available: the plant is not Hurwitz";

/// Reduce the plant, then discretize the reduced plant over the grid.
pub fn approach_one(
    sd: &SampledDataSystem,
    request: ReductionRequest,
    choice: LeftInverseChoice,
) -> Result<Reduction> {
    sd.validate()?;
    let plant = &sd.plant;
    let mut clock = Stopwatch::new();
    let mut notices = Vec::new();
    let (hurwitz, p) = resolve_inverse(plant, choice)?;

    let levels = reachability_levels_lti(plant, request, DEFAULT_RANK_TOL)?;
    let horizon = levels.horizon();
    if levels.saturated {
        notices.push(format!(
            "reachability space saturated at dimension {}; the reduction is exact",
            levels.dim()
        ));
    }
    clock.lap("reachability");
    let proj = projection(levels.basis.clone(), horizon, p.as_ref())?;
    let reduced_plant = reduce_lti(plant, &proj)?;
    let original = markov_parameters_lti(plant, horizon);
    let reduced = markov_parameters_lti(&reduced_plant, horizon);
    let residuals: Vec<f64> = original
        .0
        .iter()
        .zip(&reduced.0)
        .map(|(x, y)| relative_residual(x, y))
        .collect();
    check_residuals(&residuals)?;
    clock.lap("reduction");

    let reduced_sd = SampledDataSystem {
        plant: reduced_plant.clone(),
        grid: sd.grid.clone(),
    };
    let system = build_switched_model(&reduced_sd)?;
    clock.lap("discretization");

    let certificate = if hurwitz {
        match reduced_plant.is_hurwitz()? {
            (true, _) => {
                let p_bar = lyapunov_from_plant(&reduced_plant)?;
                match check_quadratic_stability(&system, &p_bar)? {
                    QuadraticStability::Certified(c) => Some(c),
                    QuadraticStability::Refuted(r) => {
                        return Err(Error::Consistency(format!(
                            "Lyapunov matrix of the Hurwitz reduced plant does not certify its discretization: {r}"
                        )))
                    }
                }
            }
            (false, abscissa) => {
                notices.push(format!(
                    "stability not preserved: reduced plant has spectral abscissa {abscissa:e} \
                     (pseudoinverse projection)"
                ));
                None
            }
        }
    } else {
        notices.push(NO_CERTIFICATE.into());
        None
    };
    clock.lap("certificate");

    let report = ReductionReport {
        approach: Approach::One,
        n: plant.n(),
        r: proj.order(),
        horizon,
        d: sd.grid.len(),
        grid: sd.grid.clone(),
        left_inverse_kind: proj.kind,
        certificate,
        markov_match_residuals: residuals,
        reachability_dims: levels.dims,
        saturated: levels.saturated,
        notices,
        timings: clock.out,
    };
    Ok(Reduction {
        system,
        projection: proj,
        reduced_plant: Some(reduced_plant),
        report,
    })
}

/// Discretize over the grid, then reduce the switched model.
pub fn approach_two(
    sd: &SampledDataSystem,
    request: ReductionRequest,
    choice: LeftInverseChoice,
) -> Result<Reduction> {
    sd.validate()?;
    let mut clock = Stopwatch::new();
    let mut notices = Vec::new();
    let (hurwitz, p) = resolve_inverse(&sd.plant, choice)?;
    let ls = build_switched_model(sd)?;
    clock.lap("discretization");

    let levels = reachability_levels_ls(&ls, request, DEFAULT_RANK_TOL)?;
    let horizon = levels.horizon();
    if levels.saturated {
        notices.push(format!(
            "reachability space saturated at dimension {}; the reduction is exact",
            levels.dim()
        ));
    }
    clock.lap("reachability");
    let proj = projection(levels.basis.clone(), horizon, p.as_ref())?;
    let system = reduce_ls(&ls, &proj)?;
    let mut checked = horizon;
    while markov_count(ls.num_modes(), checked) > DEFAULT_MARKOV_CAP as u128 {
        checked -= 1;
    }
    if checked < horizon {
        notices.push(format!(
            "Markov residuals checked up to length {checked} only (enumeration budget)"
        ));
    }
    let residuals = markov_residuals_by_length(
        &markov_parameters_ls(&ls, checked)?,
        &markov_parameters_ls(&system, checked)?,
    )?;
    check_residuals(&residuals)?;
    clock.lap("reduction");

    let certificate = match (&p, hurwitz) {
        (Some(p), _) => Some(certify_reduction(&ls, p, &proj)?.1),
        (None, true) => {
            let p = lyapunov_from_plant(&sd.plant)?;
            let p_bar = proj.v.transpose() * &p * &proj.v;
            match check_quadratic_stability(&system, &p_bar)? {
                QuadraticStability::Certified(c) => Some(c),
                QuadraticStability::Refuted(r) => {
                    notices.push(format!("stability not preserved (pseudoinverse projection): {r}"));
                    None
                }
            }
        }
        (None, false) => {
            notices.push(NO_CERTIFICATE.into());
            None
        }
    };
    clock.lap("certificate");

    let report = ReductionReport {
        approach: Approach::Two,
        n: ls.n(),
        r: proj.order(),
        horizon,
        d: ls.num_modes(),
        grid: sd.grid.clone(),
        left_inverse_kind: proj.kind,
        certificate,
        markov_match_residuals: residuals,
        reachability_dims: levels.dims,
        saturated: levels.saturated,
        notices,
        timings: clock.out,
    };
    Ok(Reduction {
        system,
        projection: proj,
        reduced_plant: None,
        report,
    })
}

fn check_residuals(residuals: &[f64]) -> Result<()> {
    match residuals.iter().position(|r| !(*r <= MARKOV_MATCH_TOL)) {
        Some(k) => Err(Error::Consistency(format!(
            "Markov residual {:e} at index {k} exceeds {MARKOV_MATCH_TOL:e}",
            residuals[k]
        ))),
        None => Ok(()),
    }
}
