// SPDX-License-Identifier: Apache-2.0

//! Trajectory simulation of switched models, seeded input/switching
//! generation, the best-fit-rate metric and Monte-Carlo comparison
//! campaigns.
//!
//! Random streams are ChaCha8 generators seeded with the campaign seed and
//! selected by `set_stream(trial_index)`, so each trial is reproducible on
//! its own and independent of the thread that runs it. Gaussian samples use
//! the ziggurat sampler of `rand_distr::StandardNormal`.

mod campaign;

pub use campaign::{
    run_comparison_campaign, ApproachSummary, CampaignConfig, CampaignReport, RepresentativeTrace,
};

use nalgebra::DVector;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{SamplingGrid, SwitchedLinearSystem};

/// Mode indices `σ_0 … σ_K` (zero-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchingSequence(pub Vec<usize>);

/// Inputs `u_0 … u_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSequence(pub Vec<DVector<f64>>);

impl SwitchingSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl InputSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputTrace {
    /// `t_0 = 0`, `t_{k+1} = t_k + ĥ_{σ_k}`; step indices when no grid is known.
    pub instants: Vec<f64>,
    pub outputs: Vec<DVector<f64>>,
    /// `x_0 … x_K`.
    pub states: Vec<DVector<f64>>,
}

impl OutputTrace {
    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn with_grid(mut self, grid: &SamplingGrid, sigma: &SwitchingSequence) -> Self {
        self.instants = sampling_instants(grid, sigma, self.outputs.len());
        self
    }
}

/// `t_0 … t_{len-1}` for the switching sequence `sigma`.
pub fn sampling_instants(grid: &SamplingGrid, sigma: &SwitchingSequence, len: usize) -> Vec<f64> {
    let mut t = 0.0;
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        out.push(t);
        if let Some(&mode) = sigma.0.get(k) {
            t += grid.interval(mode);
        }
    }
    out
}

/// Runs `x_{k+1} = Â_{σ_k}x_k + B̂_{σ_k}u_k`, `y_k = Cx_k` for `k = 0…K`.
/// `x0` defaults to the origin.
pub fn simulate_ls(
    sys: &SwitchedLinearSystem,
    u: &InputSequence,
    sigma: &SwitchingSequence,
    x0: Option<&DVector<f64>>,
) -> Result<OutputTrace> {
    if u.len() != sigma.len() {
        return Err(Error::LengthMismatch(format!(
            "{} inputs but {} switching values",
            u.len(),
            sigma.len()
        )));
    }
    let (n, m, d) = (sys.n(), sys.m(), sys.num_modes());
    if let Some(k) = u.0.iter().position(|uk| uk.len() != m) {
        return Err(Error::dim("input sequence", m, format!("{} at step {k}", u.0[k].len())));
    }
    if let Some(k) = sigma.0.iter().position(|&s| s >= d) {
        return Err(Error::InvalidArgument(format!(
            "switching value {} at step {k} is outside 0..{d}",
            sigma.0[k]
        )));
    }
    let mut x = match x0 {
        Some(x0) if x0.len() != n => return Err(Error::dim("initial state", n, x0.len())),
        Some(x0) => x0.clone(),
        None => DVector::zeros(n),
    };
    let len = u.len();
    let mut outputs = Vec::with_capacity(len);
    let mut states = Vec::with_capacity(len);
    for (uk, &mode) in u.0.iter().zip(&sigma.0) {
        outputs.push(&sys.c * &x);
        let md = &sys.modes[mode];
        let next = &md.a * &x + &md.b * uk;
        states.push(std::mem::replace(&mut x, next));
    }
    Ok(OutputTrace {
        instants: (0..len).map(|k| k as f64).collect(),
        outputs,
        states,
    })
}

/// How sampling intervals are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SwitchingDistribution {
    /// i.i.d. uniform over the grid.
    #[default]
    Uniform,
    /// i.i.d. with the given (unnormalized) mode weights.
    Weighted(Vec<f64>),
    /// Markov chain; `transition[i][j]` weights a move from mode `i` to `j`.
    Markov {
        initial: Vec<f64>,
        transition: Vec<Vec<f64>>,
    },
}

impl SwitchingDistribution {
    pub fn check(&self, modes: usize) -> Result<()> {
        let ok = |w: &[f64]| {
            w.len() == modes && w.iter().all(|x| x.is_finite() && *x >= 0.0) && w.iter().sum::<f64>() > 0.0
        };
        let valid = match self {
            Self::Uniform => modes > 0,
            Self::Weighted(w) => ok(w),
            Self::Markov {
                initial,
                transition,
            } => ok(initial) && transition.len() == modes && transition.iter().all(|row| ok(row)),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "switching distribution does not match {modes} modes"
            )))
        }
    }

    fn sampler(&self, modes: usize) -> Result<ModeSampler> {
        self.check(modes)?;
        let weighted = |w: &[f64]| {
            WeightedIndex::new(w).map_err(|e| Error::InvalidArgument(format!("bad weights: {e}")))
        };
        Ok(match self {
            Self::Uniform => ModeSampler::Uniform(modes),
            Self::Weighted(w) => ModeSampler::Iid(weighted(w)?),
            Self::Markov {
                initial,
                transition,
            } => ModeSampler::Markov {
                initial: weighted(initial)?,
                rows: transition.iter().map(|r| weighted(r)).collect::<Result<_>>()?,
                last: None,
            },
        })
    }
}

enum ModeSampler {
    Uniform(usize),
    Iid(WeightedIndex<f64>),
    Markov {
        initial: WeightedIndex<f64>,
        rows: Vec<WeightedIndex<f64>>,
        last: Option<usize>,
    },
}

impl ModeSampler {
    fn next(&mut self, rng: &mut ChaCha8Rng) -> usize {
        match self {
            Self::Uniform(d) => rng.random_range(0..*d),
            Self::Iid(w) => w.sample(rng),
            Self::Markov {
                initial,
                rows,
                last,
            } => {
                let mode = match *last {
                    None => initial.sample(rng),
                    Some(prev) => rows[prev].sample(rng),
                };
                *last = Some(mode);
                mode
            }
        }
    }
}

/// Generator for trial `stream` of a campaign seeded with `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_inputs(rng: &mut ChaCha8Rng, len: usize, m: usize) -> InputSequence {
    InputSequence(
        (0..len)
            .map(|_| DVector::from_fn(m, |_, _| rng.sample(StandardNormal)))
            .collect(),
    )
}

/// `count` pairs of length `K + 1`: uniform i.i.d. switching over `D` modes,
/// then standard normal inputs, each pair from its own stream.
pub fn generate_campaign_sequences(
    seed: u64,
    k: usize,
    modes: usize,
    m: usize,
    count: usize,
) -> Vec<(InputSequence, SwitchingSequence)> {
    (0..count)
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let sigma = SwitchingSequence((0..=k).map(|_| rng.random_range(0..modes)).collect());
            let u = gaussian_inputs(&mut rng, k + 1, m);
            (u, sigma)
        })
        .collect()
}

/// Draws switching values until the elapsed time `Σ ĥ_{σ_k}` first reaches
/// `total_time`; `K` is the number of draws needed. One further value is
/// appended so that `|σ| = K + 1` matches the input length.
pub fn horizon_to_length(
    grid: &SamplingGrid,
    dist: &SwitchingDistribution,
    total_time: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(usize, SwitchingSequence)> {
    if !(total_time > 0.0) || !total_time.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time horizon must be positive, got {total_time}"
        )));
    }
    let mut sampler = dist.sampler(grid.len())?;
    // absorbs rounding in sums such as 0.1 + 0.1 + …
    let target = total_time * (1.0 - 1e-12);
    let mut elapsed = 0.0;
    let mut sigma = Vec::new();
    while elapsed < target {
        let mode = sampler.next(rng);
        elapsed += grid.interval(mode);
        sigma.push(mode);
    }
    let k = sigma.len();
    sigma.push(sampler.next(rng));
    Ok((k, SwitchingSequence(sigma)))
}

/// One horizon-driven trial: switching first, then Gaussian inputs.
pub fn horizon_trial(
    grid: &SamplingGrid,
    dist: &SwitchingDistribution,
    total_time: f64,
    m: usize,
    seed: u64,
    stream: u64,
) -> Result<(InputSequence, SwitchingSequence)> {
    let mut rng = trial_rng(seed, stream);
    let (k, sigma) = horizon_to_length(grid, dist, total_time, &mut rng)?;
    let u = gaussian_inputs(&mut rng, k + 1, m);
    Ok((u, sigma))
}

/// Best fit rate in percent:
/// `100·max(1 − √Σ‖y_k − ȳ_k‖² / √Σ‖y_k − y_m‖², 0)` with `y_m` the mean
/// of `y`.
pub fn bfr(y: &OutputTrace, ybar: &OutputTrace) -> Result<f64> {
    bfr_outputs(&y.outputs, &ybar.outputs)
}

pub fn bfr_outputs(y: &[DVector<f64>], ybar: &[DVector<f64>]) -> Result<f64> {
    if y.len() != ybar.len() || y.is_empty() {
        return Err(Error::LengthMismatch(format!(
            "BFR needs equal non-empty traces, got {} and {}",
            y.len(),
            ybar.len()
        )));
    }
    let p = y[0].len();
    if y.iter().chain(ybar).any(|v| v.len() != p) {
        return Err(Error::dim("BFR outputs", p, "mixed output sizes"));
    }
    let mean = y.iter().fold(DVector::zeros(p), |acc, v| acc + v) / y.len() as f64;
    let num: f64 = y.iter().zip(ybar).map(|(a, b)| (a - b).norm_squared()).sum();
    let den: f64 = y.iter().map(|a| (a - &mean).norm_squared()).sum();
    if den == 0.0 {
        return Err(Error::UndefinedBfr);
    }
    Ok(100.0 * (1.0 - num.sqrt() / den.sqrt()).max(0.0))
}
