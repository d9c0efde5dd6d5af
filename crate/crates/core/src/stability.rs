// SPDX-License-Identifier: Apache-2.0

//! Quadratic stability of switched models: common Lyapunov certificates,
//! their construction from a Hurwitz plant, and the weighted left inverse
//! that carries a certificate over to a projected model.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matops::{
    default_margin_tol, is_symmetric, lambda_max, max_abs, solve_continuous_lyapunov, symmetric_eigenvalues,
    symmetrize, Matrix,
};
use crate::mm_lti::ProjectionReduction;
use crate::mm_ls::project_ls;
use crate::systems::{ContinuousLtiSystem, SwitchedLinearSystem};

/// Smallest accepted `λ_min/λ_max` of `VᵀPV`.
pub const MIN_RCOND: f64 = 1e-14;

/// `P ≻ 0` with `Â_iᵀPÂ_i − P ≺ 0` for every mode.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityCertificate {
    #[serde(with = "crate::matops::rows")]
    pub p: Matrix,
    /// `λ_max(Â_iᵀPÂ_i − P)` per mode.
    pub margins: Vec<f64>,
    pub lambda_min_p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Refutation {
    /// Failing mode, or `None` when `P` itself is not positive definite.
    pub mode: Option<usize>,
    /// The offending eigenvalue: a margin, or `λ_min(P)`.
    pub lambda: f64,
    pub margins: Vec<f64>,
}

impl std::fmt::Display for Refutation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.mode {
            Some(i) => write!(f, "mode {} has margin {:e} (not negative)", i + 1, self.lambda),
            None => write!(f, "P is not positive definite (lambda_min = {:e})", self.lambda),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum QuadraticStability {
    Certified(StabilityCertificate),
    Refuted(Refutation),
}

impl QuadraticStability {
    pub fn certificate(self) -> Option<StabilityCertificate> {
        match self {
            Self::Certified(c) => Some(c),
            Self::Refuted(_) => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, Self::Certified(_))
    }
}

fn mode_margin(a: &Matrix, p: &Matrix) -> (f64, f64) {
    let s = symmetrize(&(a.transpose() * p * a - p));
    (lambda_max(&s), default_margin_tol(&s))
}

/// Margins are strict: a mode passes only if `λ_max < −1e-10·(1 + ‖S‖_max)`.
pub fn check_quadratic_stability(sys: &SwitchedLinearSystem, p: &Matrix) -> Result<QuadraticStability> {
    let n = sys.n();
    if p.shape() != (n, n) {
        return Err(Error::dim("Lyapunov matrix", format!("{n}x{n}"), format!("{:?}", p.shape())));
    }
    if !p.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("Lyapunov matrix"));
    }
    if !is_symmetric(p) {
        return Err(Error::InvalidArgument("Lyapunov matrix is not symmetric".into()));
    }
    let p = symmetrize(p);
    let margins_tols: Vec<(f64, f64)> = sys.modes.iter().map(|md| mode_margin(&md.a, &p)).collect();
    let margins: Vec<f64> = margins_tols.iter().map(|(m, _)| *m).collect();
    let lambda_min_p = symmetric_eigenvalues(&p).first().copied().unwrap_or(f64::INFINITY);
    if !(lambda_min_p > default_margin_tol(&p)) {
        return Ok(QuadraticStability::Refuted(Refutation {
            mode: None,
            lambda: lambda_min_p,
            margins,
        }));
    }
    if let Some(i) = margins_tols.iter().position(|(m, tol)| !(*m < -tol)) {
        return Ok(QuadraticStability::Refuted(Refutation {
            mode: Some(i),
            lambda: margins[i],
            margins,
        }));
    }
    Ok(QuadraticStability::Certified(StabilityCertificate {
        p,
        margins,
        lambda_min_p,
    }))
}

pub fn lyapunov_from_plant(plant: &ContinuousLtiSystem) -> Result<Matrix> {
    lyapunov_from_plant_with(plant, &Matrix::identity(plant.n(), plant.n()))
}

/// `P` solving `AᵀP + PA = −Q`.
pub fn lyapunov_from_plant_with(plant: &ContinuousLtiSystem, q: &Matrix) -> Result<Matrix> {
    solve_continuous_lyapunov(&plant.a, q).map(|p| symmetrize(&p))
}

/// `(VᵀPV)⁻¹VᵀP`.
pub fn stability_preserving_left_inverse(v: &Matrix, p: &Matrix) -> Result<Matrix> {
    let n = v.nrows();
    if p.shape() != (n, n) {
        return Err(Error::dim("Lyapunov matrix", format!("{n}x{n}"), format!("{:?}", p.shape())));
    }
    if v.ncols() == 0 || v.ncols() > n {
        return Err(Error::dim("V", format!("{n} x r with 1 <= r <= {n}"), format!("{:?}", v.shape())));
    }
    let vtp = v.transpose() * p;
    let gram = symmetrize(&(&vtp * v));
    let ev = symmetric_eigenvalues(&gram);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    let rcond = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(rcond > MIN_RCOND) {
        return Err(Error::Conditioning { rcond });
    }
    let chol = gram.cholesky().ok_or(Error::Conditioning { rcond })?;
    Ok(chol.solve(&vtp))
}

/// Reduced model `(Vinv Â_i V, Vinv B̂_i, C V)` and its certificate
/// `P̄ = VᵀPV`.
///
/// `P` must certify `original`. A reduced refutation is reported as an
/// [`Error::Consistency`], since it can only come from numerical breakdown
/// when `proj.vinv` is the weighted left inverse for `P`.
pub fn certify_reduction(
    original: &SwitchedLinearSystem,
    p: &Matrix,
    proj: &ProjectionReduction,
) -> Result<(SwitchedLinearSystem, StabilityCertificate)> {
    if proj.v.nrows() != original.n() {
        return Err(Error::dim("certify_reduction", format!("V with {} rows", original.n()), proj.v.nrows()));
    }
    if let QuadraticStability::Refuted(r) = check_quadratic_stability(original, p)? {
        return Err(Error::InvalidArgument(format!("P does not certify the original model: {r}")));
    }
    let reduced = project_ls(original, proj);
    let p_bar = symmetrize(&(proj.v.transpose() * p * &proj.v));
    match check_quadratic_stability(&reduced, &p_bar)? {
        QuadraticStability::Certified(c) => Ok((reduced, c)),
        QuadraticStability::Refuted(r) => {
            let ev = symmetric_eigenvalues(&p_bar);
            let cond = ev.last().copied().unwrap_or(0.0) / ev.first().copied().unwrap_or(0.0);
            let weight_err = max_abs(&(&proj.vinv - stability_preserving_left_inverse(&proj.v, p)?));
            Err(Error::Consistency(format!(
                "reduced model not certified by V'PV: {r}; cond(V'PV) = {cond:e}, \
                 distance of Vinv from the weighted inverse = {weight_err:e}"
            )))
        }
    }
}
