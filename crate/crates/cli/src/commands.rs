// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use sdmor::discretize::build_switched_model_checked;
use sdmor::generate::{random_plant, PlantSpec, SpectrumEntry, SpectrumSpec};
use sdmor::simulate::{run_comparison_campaign, trial_rng, CampaignConfig};
use sdmor::stability::{check_quadratic_stability, lyapunov_from_plant, QuadraticStability};
use sdmor::{
    approach_one, approach_two, ContinuousLtiSystem, LeftInverseChoice, ReductionRequest, SampledDataSystem,
    SamplingGrid,
};
use serde_json::json;

use crate::error::{CliError, CliResult, ExitCode};
use crate::io::write_atomic;
use crate::system_file::{load_p, SystemData, SystemFile};
use crate::{ApproachArg, CampaignArgs, Command, GenerateArgs, GridArg, InverseArg, ReduceArgs, RequestArg};

pub fn run(command: Command) -> CliResult<ExitCode> {
    match command {
        Command::Discretize { input, grid, output } => discretize(&input, &grid, output.as_deref()),
        Command::Reduce(args) => reduce(&args),
        Command::Certify { system, plant, p } => certify(&system, plant.as_deref(), p.as_deref()),
        Command::Campaign(args) => campaign(&args),
        Command::Generate(args) => generate(&args),
    }
}

fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|_| CliError::parse(format!("{what}: \"{t}\" is not a number")))
        })
        .collect()
}

fn resolve_grid(arg: &GridArg, file: &SystemFile) -> CliResult<SamplingGrid> {
    let values = match (&arg.grid, &file.h) {
        (Some(s), _) => parse_list(s, "--grid")?,
        (None, Some(h)) => h.clone(),
        (None, None) => return Err(CliError::validate("no sampling grid: pass --grid or add \"H\" to the file")),
    };
    Ok(SamplingGrid::new(values)?)
}

fn request(arg: &RequestArg) -> ReductionRequest {
    match (arg.order, arg.moments) {
        (Some(r), _) => ReductionRequest::MaxOrder(r),
        (None, Some(n)) => ReductionRequest::Moments(n),
        (None, None) => unreachable!("clap requires one of --order/--moments"),
    }
}

fn inverse(arg: &InverseArg) -> LeftInverseChoice {
    if arg.stable_inverse {
        LeftInverseChoice::StabilityPreserving
    } else if arg.pseudo_inverse {
        LeftInverseChoice::Pseudoinverse
    } else {
        LeftInverseChoice::Auto
    }
}

fn emit(path: Option<&Path>, contents: &str) -> CliResult<()> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn discretize(input: &Path, grid: &GridArg, output: Option<&Path>) -> CliResult<ExitCode> {
    let file = SystemFile::load(input)?;
    let grid = resolve_grid(grid, &file)?;
    let sd = SampledDataSystem::new(file.plant()?.clone(), grid.clone())?;
    let (ls, residual) = build_switched_model_checked(&sd)?;
    for (i, h) in grid.intervals().iter().enumerate() {
        eprintln!("mode {}: h = {h}, A {}x{}, B {}x{}", i + 1, ls.n(), ls.n(), ls.n(), ls.m());
    }
    eprintln!("exponential identity residual: {residual:e}");
    let out = SystemFile::ls(ls, Some(grid.intervals().to_vec()), file.meta.clone());
    emit(output, &out.to_json())?;
    Ok(ExitCode::Ok)
}

fn reduce(args: &ReduceArgs) -> CliResult<ExitCode> {
    let file = SystemFile::load(&args.input)?;
    let grid = resolve_grid(&args.grid, &file)?;
    let sd = SampledDataSystem::new(file.plant()?.clone(), grid.clone())?;
    let req = request(&args.request);
    let choice = inverse(&args.inverse);
    let (reduction, number) = match args.approach {
        ApproachArg::One => (approach_one(&sd, req, choice)?, 1),
        ApproachArg::Two => (approach_two(&sd, req, choice)?, 2),
    };
    let report = &reduction.report;
    eprintln!(
        "approach {number}: n = {}, r = {}, N = {}, left inverse {:?}, certified = {}",
        report.n,
        report.r,
        report.horizon,
        report.left_inverse_kind,
        report.certificate.is_some()
    );
    for notice in &report.notices {
        eprintln!("note: {notice}");
    }
    let meta = json!({
        "approach": number,
        "n": report.n,
        "r": report.r,
        "horizon": report.horizon,
    });
    if let Some(path) = &args.reduced_plant {
        let plant = reduction.reduced_plant.clone().ok_or_else(|| {
            CliError::new(ExitCode::Validate, "--reduced-plant is only available with --approach 1")
        })?;
        write_atomic(path, &SystemFile::lti(plant, Some(grid.intervals().to_vec()), Some(meta.clone())).to_json())?;
    }
    if let Some(path) = &args.report {
        write_atomic(path, &(report.to_json(args.timings) + "\n"))?;
    }
    let out = SystemFile::ls(reduction.system, Some(grid.intervals().to_vec()), Some(meta));
    emit(args.output.as_deref(), &out.to_json())?;
    Ok(ExitCode::Ok)
}

fn hurwitz_or_exit(plant: &ContinuousLtiSystem) -> CliResult<()> {
    let (stable, abscissa) = plant.is_hurwitz()?;
    if stable {
        Ok(())
    } else {
        Err(CliError::new(
            ExitCode::NotHurwitz,
            format!("plant is not Hurwitz: spectral abscissa {abscissa}"),
        ))
    }
}

fn certify(system: &Path, plant: Option<&Path>, p: Option<&Path>) -> CliResult<ExitCode> {
    let file = SystemFile::load(system)?;
    let ls = match &file.data {
        SystemData::Ls(ls) => ls.clone(),
        SystemData::Lti(pl) => {
            let h = file
                .h
                .clone()
                .ok_or_else(|| CliError::validate("a plant file needs \"H\" to be certified"))?;
            build_switched_model_checked(&SampledDataSystem::new(pl.clone(), SamplingGrid::new(h)?)?)?.0
        }
    };
    let p = match (plant, p) {
        (_, Some(path)) => load_p(path)?,
        (Some(path), None) => {
            let pf = SystemFile::load(path)?;
            let pl = pf.plant()?;
            hurwitz_or_exit(pl)?;
            lyapunov_from_plant(pl)?
        }
        (None, None) => match &file.data {
            SystemData::Lti(pl) => {
                hurwitz_or_exit(pl)?;
                lyapunov_from_plant(pl)?
            }
            SystemData::Ls(_) => return Err(CliError::validate("certify needs --plant or --p")),
        },
    };
    if p.nrows() != ls.n() {
        return Err(CliError::validate(format!("P is {}x{} but the model has {} states", p.nrows(), p.ncols(), ls.n())));
    }
    let verdict = check_quadratic_stability(&ls, &p)?;
    println!("{}", serde_json::to_string_pretty(&verdict).expect("verdict serializes"));
    match verdict {
        QuadraticStability::Certified(c) => {
            eprintln!("certified: margins {:?}", c.margins);
            Ok(ExitCode::Ok)
        }
        QuadraticStability::Refuted(r) => {
            eprintln!("refuted: {r}; margins {:?}", r.margins);
            Ok(ExitCode::Refuted)
        }
    }
}

fn campaign(args: &CampaignArgs) -> CliResult<ExitCode> {
    let file = SystemFile::load(&args.plant)?;
    let grid = resolve_grid(&args.grid, &file)?;
    if !(args.horizon.is_finite() && args.horizon > 0.0) {
        return Err(CliError::validate("--horizon must be positive"));
    }
    if args.count == 0 {
        return Err(CliError::validate("--count must be positive"));
    }
    if args.threads == Some(0) {
        return Err(CliError::validate("--threads must be positive"));
    }
    let mut cfg = CampaignConfig::new(file.plant()?.clone(), grid, request(&args.request));
    cfg.count = args.count;
    cfg.seed = args.seed;
    cfg.horizon = args.horizon;
    cfg.inverse = inverse(&args.inverse);
    cfg.threads = args.threads;
    let report = run_comparison_campaign(&cfg)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    for (name, contents) in report.output_files() {
        write_atomic(&args.out_dir.join(&name), &contents)?;
    }
    print!("{}", report.table());
    Ok(ExitCode::Ok)
}

fn parse_spectrum(s: &str) -> CliResult<Vec<SpectrumEntry>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            let bad = || CliError::parse(format!("--spectrum: \"{t}\" is not \"re\" or \"re:im\""));
            let (re, im) = match t.split_once(':') {
                Some((re, im)) => (re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?),
                None => (t.parse().map_err(|_| bad())?, 0.0),
            };
            Ok(SpectrumEntry { re, im })
        })
        .collect()
}

fn generate(args: &GenerateArgs) -> CliResult<ExitCode> {
    let mut spec = PlantSpec::stable(args.n, args.m, args.p);
    if let Some(c) = args.coupling {
        spec.coupling = c;
    }
    if let Some(s) = &args.spectrum {
        spec.spectrum = SpectrumSpec::Explicit(parse_spectrum(s)?);
    } else if let SpectrumSpec::Random {
        real_range,
        imag_max,
        complex_fraction,
        unstable,
    } = &mut spec.spectrum
    {
        if let Some(r) = &args.real_range {
            match parse_list(r, "--real-range")?[..] {
                [lo, hi] => *real_range = (lo, hi),
                _ => return Err(CliError::parse("--real-range takes \"lo,hi\"")),
            }
        }
        if let Some(x) = args.imag_max {
            *imag_max = x;
        }
        if let Some(x) = args.complex_fraction {
            *complex_fraction = x;
        }
        *unstable = args.unstable;
    }
    let h = match &args.grid {
        Some(g) => Some(SamplingGrid::new(parse_list(g, "--grid")?)?.intervals().to_vec()),
        None => None,
    };
    let plant = random_plant(&mut trial_rng(args.seed, 0), &spec)?;
    let meta = json!({ "seed": args.seed, "spec": spec });
    emit(args.output.as_deref(), &SystemFile::lti(plant, h, Some(meta)).to_json())?;
    Ok(ExitCode::Ok)
}
