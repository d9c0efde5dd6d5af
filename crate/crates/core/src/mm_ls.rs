// SPDX-License-Identifier: Apache-2.0

//! Moment matching for linear switched models: switched Markov parameters
//! `C Â_{k_1} ⋯ Â_{k_M} B̂_j`, the N-partial reachability space spanned by
//! all word images of the mode inputs, and projection onto it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matops::Matrix;
use crate::mm_lti::{
    check_span, grow_reachability, relative_residual, ProjectionReduction, ReachabilityLevels,
    ReductionRequest,
};
use crate::simulate::{generate_campaign_sequences, simulate_ls};
use crate::systems::{Mode, SwitchedLinearSystem, Validate};

/// Default cap on the number of enumerated switched Markov parameters.
pub const DEFAULT_MARKOV_CAP: usize = 1_000_000;
/// Relative output tolerance for the horizon guarantee.
pub const HORIZON_TOL: f64 = 1e-7;

/// `C Â_{word[0]} ⋯ Â_{word[M-1]} B̂_{entry_mode}`; indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchedMarkovParameter {
    pub word: Vec<usize>,
    pub entry_mode: usize,
    #[serde(skip)]
    pub value: Matrix,
}

/// `Σ_{M=0}^{N} D^{M+1}`, saturating.
pub fn markov_count(modes: usize, horizon: usize) -> u128 {
    let d = modes as u128;
    let mut total: u128 = 0;
    let mut term: u128 = d;
    for _ in 0..=horizon {
        total = total.saturating_add(term);
        term = term.saturating_mul(d);
    }
    total
}

pub fn markov_parameters_ls(sys: &SwitchedLinearSystem, horizon: usize) -> Result<Vec<SwitchedMarkovParameter>> {
    markov_parameters_ls_capped(sys, horizon, DEFAULT_MARKOV_CAP)
}

/// All parameters of word length `0…N`, ordered by length, then word
/// (lexicographically), then entry mode.
pub fn markov_parameters_ls_capped(
    sys: &SwitchedLinearSystem,
    horizon: usize,
    cap: usize,
) -> Result<Vec<SwitchedMarkovParameter>> {
    sys.validate()?;
    let d = sys.num_modes();
    let count = markov_count(d, horizon);
    if count > cap as u128 {
        return Err(Error::Budget { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    // row products C Â_{k_1} ⋯ Â_{k_M} for all words of the current length
    let mut rows: Vec<(Vec<usize>, Matrix)> = vec![(Vec::new(), sys.c.clone())];
    for length in 0..=horizon {
        for (word, z) in &rows {
            for (j, md) in sys.modes.iter().enumerate() {
                out.push(SwitchedMarkovParameter {
                    word: word.clone(),
                    entry_mode: j,
                    value: z * &md.b,
                });
            }
        }
        if length < horizon {
            rows = rows
                .iter()
                .flat_map(|(word, z)| {
                    sys.modes.iter().enumerate().map(move |(k, md)| {
                        let mut w = word.clone();
                        w.push(k);
                        (w, z * &md.a)
                    })
                })
                .collect();
        }
    }
    Ok(out)
}

/// Largest floored relative residual per word length between two parameter
/// lists enumerated in the same order.
pub fn markov_residuals_by_length(
    original: &[SwitchedMarkovParameter],
    reduced: &[SwitchedMarkovParameter],
) -> Result<Vec<f64>> {
    if original.len() != reduced.len() {
        return Err(Error::LengthMismatch(format!(
            "{} original and {} reduced parameters",
            original.len(),
            reduced.len()
        )));
    }
    let mut out: Vec<f64> = Vec::new();
    for (x, y) in original.iter().zip(reduced) {
        if x.word != y.word || x.entry_mode != y.entry_mode {
            return Err(Error::Consistency("parameter lists enumerate different words".into()));
        }
        let len = x.word.len();
        if out.len() <= len {
            out.resize(len + 1, 0.0);
        }
        out[len] = out[len].max(relative_residual(&x.value, &y.value));
    }
    Ok(out)
}

pub fn reachability_levels_ls(
    sys: &SwitchedLinearSystem,
    request: ReductionRequest,
    rank_tol: f64,
) -> Result<ReachabilityLevels> {
    sys.validate()?;
    let maps: Vec<&Matrix> = sys.modes.iter().map(|md| &md.a).collect();
    grow_reachability(&maps, &sys.stacked_inputs(), request, rank_tol)
}

/// Orthonormal basis of the span of `Â_{k_1} ⋯ Â_{k_M} B̂_j` over all words
/// of length `M ≤ N`.
pub fn reachability_space_ls(sys: &SwitchedLinearSystem, horizon: usize, rank_tol: f64) -> Result<Matrix> {
    reachability_levels_ls(sys, ReductionRequest::Moments(horizon), rank_tol).map(|l| l.basis)
}

/// `(Vinv Â_i V, Vinv B̂_i)` for every mode and `C V`.
pub fn reduce_ls(sys: &SwitchedLinearSystem, proj: &ProjectionReduction) -> Result<SwitchedLinearSystem> {
    sys.validate()?;
    if proj.v.nrows() != sys.n() {
        return Err(Error::dim("reduce_ls", format!("V with {} rows", sys.n()), proj.v.nrows()));
    }
    let maps: Vec<&Matrix> = sys.modes.iter().map(|md| &md.a).collect();
    check_span(&maps, &sys.stacked_inputs(), proj)?;
    Ok(project_ls(sys, proj))
}

/// Projection without the span check.
pub(crate) fn project_ls(sys: &SwitchedLinearSystem, proj: &ProjectionReduction) -> SwitchedLinearSystem {
    SwitchedLinearSystem {
        modes: sys
            .modes
            .iter()
            .map(|md| Mode {
                a: &proj.vinv * &md.a * &proj.v,
                b: &proj.vinv * &md.b,
            })
            .collect(),
        c: &sys.c * &proj.v,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HorizonReport {
    pub horizon: usize,
    pub trials: usize,
    /// Largest `‖y_k − ȳ_k‖` over all trials, for `k = 0 … N + extra`.
    pub max_deviation: Vec<f64>,
    /// Largest `‖y_k − ȳ_k‖ / (1 + ‖y_k‖)`, same indexing.
    pub max_relative: Vec<f64>,
    /// Every `k ≤ N` within [`HORIZON_TOL`].
    pub passed: bool,
}

/// Simulates both systems from rest on `trials` seeded random input and
/// switching sequences of length `N + 1 + extra_steps`.
pub fn output_match_horizon_check(
    original: &SwitchedLinearSystem,
    reduced: &SwitchedLinearSystem,
    horizon: usize,
    trials: usize,
    extra_steps: usize,
    seed: u64,
) -> Result<HorizonReport> {
    let (d, m, p) = (original.num_modes(), original.m(), original.p());
    if (reduced.num_modes(), reduced.m(), reduced.p()) != (d, m, p) {
        return Err(Error::dim(
            "horizon check",
            format!("D={d}, m={m}, p={p}"),
            format!("D={}, m={}, p={}", reduced.num_modes(), reduced.m(), reduced.p()),
        ));
    }
    let steps = horizon + extra_steps;
    let mut max_deviation = vec![0.0_f64; steps + 1];
    let mut max_relative = vec![0.0_f64; steps + 1];
    for (u, sigma) in generate_campaign_sequences(seed, steps, d, m, trials) {
        let y = simulate_ls(original, &u, &sigma, None)?;
        let ybar = simulate_ls(reduced, &u, &sigma, None)?;
        for k in 0..=steps {
            let dev = (&y.outputs[k] - &ybar.outputs[k]).norm();
            max_deviation[k] = max_deviation[k].max(dev);
            max_relative[k] = max_relative[k].max(dev / (1.0 + y.outputs[k].norm()));
        }
    }
    let passed = max_relative[..=horizon].iter().all(|r| *r <= HORIZON_TOL);
    Ok(HorizonReport {
        horizon,
        trials,
        max_deviation,
        max_relative,
        passed,
    })
}
