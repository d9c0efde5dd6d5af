// SPDX-License-Identifier: Apache-2.0

//! Monte-Carlo comparison of the original switched model against the two
//! reduced models on identical input and switching realizations.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::{bfr_outputs, horizon_trial, sampling_instants, simulate_ls, SwitchingDistribution};
use crate::discretize::build_switched_model;
use crate::error::{Error, Result};
use crate::mm_lti::{LeftInverseKind, ReductionRequest};
use crate::mm_ls::HORIZON_TOL;
use crate::pipelines::{approach_one, approach_two, LeftInverseChoice, Reduction};
use crate::systems::{ContinuousLtiSystem, SampledDataSystem, SamplingGrid, SwitchedLinearSystem};

/// Output norm above which a trace is flagged as overflowing.
pub const OVERFLOW_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub plant: ContinuousLtiSystem,
    pub grid: SamplingGrid,
    pub request: ReductionRequest,
    pub count: usize,
    pub seed: u64,
    /// Total simulated time `T`.
    pub horizon: f64,
    pub switching: SwitchingDistribution,
    pub inverse: LeftInverseChoice,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl CampaignConfig {
    pub fn new(plant: ContinuousLtiSystem, grid: SamplingGrid, request: ReductionRequest) -> Self {
        Self {
            plant,
            grid,
            request,
            count: 200,
            seed: 0,
            horizon: 1.0,
            switching: SwitchingDistribution::Uniform,
            inverse: LeftInverseChoice::Auto,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproachSummary {
    pub r: usize,
    pub horizon: usize,
    pub reachability_dims: Vec<usize>,
    pub left_inverse_kind: LeftInverseKind,
    pub certified: bool,
    pub notices: Vec<String>,
    pub bfr_mean: Option<f64>,
    pub bfr_best: Option<f64>,
    pub bfr_worst: Option<f64>,
    pub best_trial: Option<usize>,
    pub worst_trial: Option<usize>,
    /// Trial whose BFR is closest to the mean (lowest index on ties).
    pub representative_trial: Option<usize>,
    /// Per trial; `None` for excluded trials.
    pub bfr: Vec<Option<f64>>,
    /// Largest `‖y_k − ȳ_k‖` over all trials, per step `k`.
    pub max_deviation: Vec<f64>,
    /// Largest `‖y_k − ȳ_k‖ / (1 + ‖y_k‖)`, per step `k`.
    pub max_relative_deviation: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HorizonGuarantee {
    pub horizon: usize,
    /// Largest relative deviation over `k ≤ N` and all trials.
    pub worst_relative: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignSetup {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub d: usize,
    pub grid: SamplingGrid,
    pub request: ReductionRequest,
    pub count: usize,
    pub seed: u64,
    pub time_horizon: f64,
    pub switching: SwitchingDistribution,
    pub inputs: &'static str,
    pub steps_per_trial: &'static str,
}

/// Data of one trial, for plotting.
#[derive(Debug, Clone)]
pub struct RepresentativeTrace {
    pub trial: usize,
    pub bfr: f64,
    pub instants: Vec<f64>,
    pub y: Vec<DVector<f64>>,
    pub ybar1: Vec<DVector<f64>>,
    pub ybar2: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignReport {
    pub setup: CampaignSetup,
    pub approach_one: ApproachSummary,
    pub approach_two: ApproachSummary,
    pub valid_trials: usize,
    pub overflow_trials: Vec<usize>,
    pub degenerate_trials: Vec<usize>,
    pub steps: Vec<usize>,
    pub horizon_guarantee: HorizonGuarantee,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub representatives: Vec<Option<RepresentativeTrace>>,
}

struct Trial {
    instants: Vec<f64>,
    y: Vec<DVector<f64>>,
    ybar: [Vec<DVector<f64>>; 2],
    overflow: bool,
    bfr: [Option<f64>; 2],
    degenerate: bool,
    dev: [Vec<f64>; 2],
    rel: [Vec<f64>; 2],
}

fn overflows(trace: &[DVector<f64>]) -> bool {
    trace.iter().any(|y| !(y.norm() <= OVERFLOW_LIMIT))
}

fn run_trial(
    cfg: &CampaignConfig,
    models: [&SwitchedLinearSystem; 3],
    index: usize,
) -> Result<Trial> {
    let (u, sigma) = horizon_trial(
        &cfg.grid,
        &cfg.switching,
        cfg.horizon,
        cfg.plant.m(),
        cfg.seed,
        index as u64,
    )?;
    let y = simulate_ls(models[0], &u, &sigma, None)?.outputs;
    let y1 = simulate_ls(models[1], &u, &sigma, None)?.outputs;
    let y2 = simulate_ls(models[2], &u, &sigma, None)?.outputs;
    let instants = sampling_instants(&cfg.grid, &sigma, y.len());
    let overflow = overflows(&y) || overflows(&y1) || overflows(&y2);
    let deviations = |yb: &[DVector<f64>]| -> (Vec<f64>, Vec<f64>) {
        y.iter()
            .zip(yb)
            .map(|(a, b)| {
                let d = (a - b).norm();
                (d, d / (1.0 + a.norm()))
            })
            .unzip()
    };
    let (d1, r1) = deviations(&y1);
    let (d2, r2) = deviations(&y2);
    let mut degenerate = false;
    let bfr = if overflow {
        [None, None]
    } else {
        match (bfr_outputs(&y, &y1), bfr_outputs(&y, &y2)) {
            (Ok(a), Ok(b)) => [Some(a), Some(b)],
            (Err(Error::UndefinedBfr), _) | (_, Err(Error::UndefinedBfr)) => {
                degenerate = true;
                [None, None]
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    };
    Ok(Trial {
        instants,
        y,
        ybar: [y1, y2],
        overflow,
        bfr,
        degenerate,
        dev: [d1, d2],
        rel: [r1, r2],
    })
}

fn fold_max(acc: &mut Vec<f64>, values: &[f64]) {
    if acc.len() < values.len() {
        acc.resize(values.len(), 0.0);
    }
    for (a, v) in acc.iter_mut().zip(values) {
        *a = a.max(*v);
    }
}

fn summarize(red: &Reduction, trials: &[Trial], which: usize) -> ApproachSummary {
    let bfr: Vec<Option<f64>> = trials.iter().map(|t| t.bfr[which]).collect();
    let valid: Vec<(usize, f64)> = bfr.iter().enumerate().filter_map(|(i, b)| b.map(|b| (i, b))).collect();
    let mut max_deviation = Vec::new();
    let mut max_relative_deviation = Vec::new();
    for t in trials {
        fold_max(&mut max_deviation, &t.dev[which]);
        fold_max(&mut max_relative_deviation, &t.rel[which]);
    }
    let (mut mean, mut best, mut worst, mut rep) = (None, None, None, None);
    if !valid.is_empty() {
        let m = valid.iter().map(|(_, b)| b).sum::<f64>() / valid.len() as f64;
        mean = Some(m);
        let pick = |better: &dyn Fn(f64, f64) -> bool| {
            valid
                .iter()
                .copied()
                .reduce(|acc, x| if better(x.1, acc.1) { x } else { acc })
                .expect("non-empty")
        };
        best = Some(pick(&|x, y| x > y));
        worst = Some(pick(&|x, y| x < y));
        rep = Some(pick(&|x, y| (x - m).abs() < (y - m).abs()).0);
    }
    ApproachSummary {
        r: red.report.r,
        horizon: red.report.horizon,
        reachability_dims: red.report.reachability_dims.clone(),
        left_inverse_kind: red.report.left_inverse_kind,
        certified: red.report.certificate.is_some(),
        notices: red.report.notices.clone(),
        bfr_mean: mean,
        bfr_best: best.map(|b| b.1),
        bfr_worst: worst.map(|w| w.1),
        best_trial: best.map(|b| b.0),
        worst_trial: worst.map(|w| w.0),
        representative_trial: rep,
        bfr,
        max_deviation,
        max_relative_deviation,
    }
}

/// Reduces the plant with both approaches, then simulates the original and
/// both reduced models on `count` seeded realizations.
pub fn run_comparison_campaign(cfg: &CampaignConfig) -> Result<CampaignReport> {
    let sd = SampledDataSystem::new(cfg.plant.clone(), cfg.grid.clone())?;
    let one = approach_one(&sd, cfg.request, cfg.inverse)?;
    let two = approach_two(&sd, cfg.request, cfg.inverse)?;
    let original = build_switched_model(&sd)?;
    run_campaign_with_models(cfg, &original, &one, &two)
}

/// Campaign over given models; `cfg.request` and `cfg.inverse` are only
/// recorded.
pub fn run_campaign_with_models(
    cfg: &CampaignConfig,
    original: &SwitchedLinearSystem,
    one: &Reduction,
    two: &Reduction,
) -> Result<CampaignReport> {
    if cfg.count == 0 {
        return Err(Error::InvalidArgument("campaign needs at least one trial".into()));
    }
    cfg.switching.check(cfg.grid.len())?;
    for red in [one, two] {
        let s = &red.system;
        if (s.num_modes(), s.m(), s.p()) != (original.num_modes(), original.m(), original.p()) {
            return Err(Error::dim(
                "campaign models",
                format!("D={}, m={}, p={}", original.num_modes(), original.m(), original.p()),
                format!("D={}, m={}, p={}", s.num_modes(), s.m(), s.p()),
            ));
        }
    }
    let models = [original, &one.system, &two.system];
    let work = || -> Result<Vec<Trial>> {
        (0..cfg.count)
            .into_par_iter()
            .map(|i| run_trial(cfg, models, i))
            .collect()
    };
    let trials = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let approach_one = summarize(one, &trials, 0);
    let approach_two = summarize(two, &trials, 1);
    let overflow_trials: Vec<usize> = (0..trials.len()).filter(|&i| trials[i].overflow).collect();
    let degenerate_trials: Vec<usize> = (0..trials.len()).filter(|&i| trials[i].degenerate).collect();
    let valid_trials = trials.len() - overflow_trials.len() - degenerate_trials.len();

    let n2 = two.report.horizon;
    let worst_relative = trials
        .iter()
        .flat_map(|t| t.rel[1].iter().take(n2 + 1))
        .fold(0.0_f64, |a, b| a.max(*b));
    let horizon_guarantee = HorizonGuarantee {
        horizon: n2,
        worst_relative,
        tolerance: HORIZON_TOL,
        passed: worst_relative <= HORIZON_TOL,
    };

    let mut notes = vec![
        "switching values are drawn i.i.d. from the configured distribution; K is derived per trial from the time horizon".to_string(),
    ];
    if !overflow_trials.is_empty() {
        notes.push(format!(
            "{} trial(s) exceeded output norm {OVERFLOW_LIMIT:e} and were excluded from BFR statistics",
            overflow_trials.len()
        ));
    }
    if !degenerate_trials.is_empty() {
        notes.push(format!(
            "{} trial(s) had a constant original output (BFR undefined) and were excluded",
            degenerate_trials.len()
        ));
    }

    let representatives = [&approach_one, &approach_two]
        .iter()
        .enumerate()
        .map(|(which, s)| {
            s.representative_trial.map(|i| {
                let t = &trials[i];
                RepresentativeTrace {
                    trial: i,
                    bfr: t.bfr[which].expect("representative is valid"),
                    instants: t.instants.clone(),
                    y: t.y.clone(),
                    ybar1: t.ybar[0].clone(),
                    ybar2: t.ybar[1].clone(),
                }
            })
        })
        .collect();

    Ok(CampaignReport {
        setup: CampaignSetup {
            n: original.n(),
            m: original.m(),
            p: original.p(),
            d: original.num_modes(),
            grid: cfg.grid.clone(),
            request: cfg.request,
            count: cfg.count,
            seed: cfg.seed,
            time_horizon: cfg.horizon,
            switching: cfg.switching.clone(),
            inputs: "i.i.d. standard normal (ziggurat sampler, ChaCha8 stream per trial)",
            steps_per_trial: "first K with t_K >= T; outputs y_0..y_K",
        },
        approach_one,
        approach_two,
        valid_trials,
        overflow_trials,
        degenerate_trials,
        steps: trials.iter().map(|t| t.y.len() - 1).collect(),
        horizon_guarantee,
        notes,
        representatives,
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
}

impl CampaignReport {
    /// Pretty JSON without timings; identical for identical seeds.
    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("campaign report serializes") + "\n"
    }

    /// Mean, best and worst BFR per approach.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<11} {:>4} {:>4} {:>12} {:>12} {:>12}\n",
            "approach", "r", "N", "mean BFR %", "best BFR %", "worst BFR %"
        ));
        for (name, s) in [("1", &self.approach_one), ("2", &self.approach_two)] {
            out.push_str(&format!(
                "{:<11} {:>4} {:>4} {:>12} {:>12} {:>12}\n",
                name,
                s.r,
                s.horizon,
                fmt_opt(s.bfr_mean),
                fmt_opt(s.bfr_best),
                fmt_opt(s.bfr_worst)
            ));
        }
        out.push_str(&format!(
            "{} of {} trials valid\n",
            self.valid_trials, self.setup.count
        ));
        out
    }

    fn rows(trace: &RepresentativeTrace) -> impl Iterator<Item = Vec<String>> + '_ {
        (0..trace.y.len()).map(move |k| {
            let mut row = vec![k.to_string(), trace.instants[k].to_string()];
            for v in [&trace.y[k], &trace.ybar1[k], &trace.ybar2[k]] {
                row.extend(v.iter().map(|x| x.to_string()));
            }
            row
        })
    }

    fn header(&self) -> Vec<String> {
        let p = self.setup.p;
        let mut h = vec!["k".to_string(), "t".to_string()];
        h.extend((1..=p).map(|i| format!("y_{i}")));
        h.extend((1..=p).map(|i| format!("ybar1_{i}")));
        h.extend((1..=p).map(|i| format!("ybar2_{i}")));
        h
    }

    /// Representative trial of approach `which` (1 or 2) as CSV.
    pub fn trace_csv(&self, which: usize) -> Option<String> {
        let trace = self.representatives.get(which.checked_sub(1)?)?.as_ref()?;
        let mut out = self.header().join(",") + "\n";
        for row in Self::rows(trace) {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        Some(out)
    }

    /// Same data, whitespace separated with a comment header for gnuplot.
    pub fn trace_dat(&self, which: usize) -> Option<String> {
        let trace = self.representatives.get(which.checked_sub(1)?)?.as_ref()?;
        let mut out = format!(
            "# approach {which}, trial {}, BFR {}\n# {}\n",
            trace.trial,
            trace.bfr,
            self.header().join(" ")
        );
        for row in Self::rows(trace) {
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        Some(out)
    }

    /// Step plots of `y` against the reduced output for each available
    /// representative trial.
    pub fn gnuplot_script(&self) -> String {
        let p = self.setup.p;
        let mut out = String::from("set terminal pngcairo size 900,500\nset xlabel 't [s]'\nset ylabel 'y'\nset key outside\n");
        for which in [1usize, 2] {
            if self.representatives[which - 1].is_none() {
                continue;
            }
            out.push_str(&format!("set output 'approach{which}.png'\nplot "));
            let mut parts = Vec::new();
            for i in 1..=p {
                let y_col = 2 + i;
                let ybar_col = 2 + which * p + i;
                parts.push(format!(
                    "'trace_approach{which}.dat' using 2:{y_col} with steps title 'y_{i}'"
                ));
                parts.push(format!(
                    "'' using 2:{ybar_col} with steps dashtype 2 title 'ybar{which}_{i}'"
                ));
            }
            out.push_str(&parts.join(", \\\n     "));
            out.push('\n');
        }
        out
    }

    /// File name and content of every campaign output.
    pub fn output_files(&self) -> Vec<(String, String)> {
        let mut files = vec![
            ("summary.json".to_string(), self.summary_json()),
            ("summary.txt".to_string(), self.table()),
        ];
        for which in [1usize, 2] {
            if let Some(csv) = self.trace_csv(which) {
                files.push((format!("trace_approach{which}.csv"), csv));
            }
            if let Some(dat) = self.trace_dat(which) {
                files.push((format!("trace_approach{which}.dat"), dat));
            }
        }
        files.push(("figure.gp".to_string(), self.gnuplot_script()));
        files
    }
}
