// SPDX-License-Identifier: Apache-2.0

//! Exact zero-order-hold discretization of a sampled-data system into a
//! linear switched model with one mode per admissible sampling interval.

use crate::error::{Error, Result};
use crate::matops::{exp_and_zoh_integral, max_abs, Matrix};
use crate::systems::{ContinuousLtiSystem, Mode, SampledDataSystem, SwitchedLinearSystem, Validate};

/// Relative tolerance on `e^{Ah} = I + AΘ(h)`.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct StepMatrices {
    /// `Φ(h) = I + AΘ(h)`
    pub phi: Matrix,
    /// `Γ(h) = Θ(h)B`
    pub gamma: Matrix,
    /// `‖e^{Ah} − (I + AΘ(h))‖_max`
    pub identity_residual: f64,
}

/// Transition and input matrices for one held step of length `h`.
///
/// Both forms of `Φ` are evaluated; disagreement beyond
/// `IDENTITY_TOL·(1 + ‖e^{Ah}‖_max)` is reported as an error because it
/// means the exponential itself is inaccurate.
pub fn step_matrices(plant: &ContinuousLtiSystem, h: f64) -> Result<StepMatrices> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sampling interval must be positive, got {h}"
        )));
    }
    let n = plant.n();
    let (exp_ah, theta) = exp_and_zoh_integral(&plant.a, h)?;
    let phi = Matrix::identity(n, n) + &plant.a * &theta;
    let gamma = &theta * &plant.b;
    let identity_residual = max_abs(&(&exp_ah - &phi));
    if identity_residual > IDENTITY_TOL * (1.0 + max_abs(&exp_ah)) {
        return Err(Error::Consistency(format!(
            "e^(Ah) and I + A*Theta(h) differ by {identity_residual:e} at h = {h}"
        )));
    }
    Ok(StepMatrices {
        phi,
        gamma,
        identity_residual,
    })
}

/// Switched model of `sd`; mode `i` corresponds to the `i`-th smallest
/// interval. Also returns the largest exponential-identity residual seen.
pub fn build_switched_model_checked(sd: &SampledDataSystem) -> Result<(SwitchedLinearSystem, f64)> {
    sd.validate()?;
    let mut modes = Vec::with_capacity(sd.grid.len());
    let mut worst = 0.0_f64;
    for &h in sd.grid.intervals() {
        let step = step_matrices(&sd.plant, h)?;
        worst = worst.max(step.identity_residual);
        modes.push(Mode {
            a: step.phi,
            b: step.gamma,
        });
    }
    let sys = SwitchedLinearSystem {
        modes,
        c: sd.plant.c.clone(),
    };
    Ok((sys, worst))
}

pub fn build_switched_model(sd: &SampledDataSystem) -> Result<SwitchedLinearSystem> {
    build_switched_model_checked(sd).map(|(sys, _)| sys)
}
