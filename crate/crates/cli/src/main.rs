// SPDX-License-Identifier: Apache-2.0

mod commands;
mod error;
mod io;
mod system_file;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "sdmor", version, about = "Moment-matching reduction of aperiodically sampled LTI plants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the switched model of a plant over a sampling grid.
    Discretize {
        /// Plant file (kind "lti").
        input: PathBuf,
        #[command(flatten)]
        grid: GridArg,
        /// Output file; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Reduce a sampled-data plant by moment matching.
    Reduce(ReduceArgs),
    /// Check quadratic stability of a switched model.
    Certify {
        /// Switched model (kind "ls"), or a plant with "H".
        system: PathBuf,
        /// Plant whose Lyapunov solution is the candidate P.
        #[arg(long, conflicts_with = "p")]
        plant: Option<PathBuf>,
        /// File holding {"P": [[...]]}.
        #[arg(long)]
        p: Option<PathBuf>,
    },
    /// Compare both approaches on random switching and input sequences.
    Campaign(CampaignArgs),
    /// Write a random plant.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct GridArg {
    /// Comma-separated sampling intervals; overrides "H" in the input file.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ApproachArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct RequestArg {
    /// Largest admissible reduced order.
    #[arg(long)]
    order: Option<usize>,
    /// Number of matched moments beyond the first (horizon N).
    #[arg(long)]
    moments: Option<usize>,
}

#[derive(Debug, Args)]
struct InverseArg {
    /// Force the stability-preserving left inverse.
    #[arg(long, conflicts_with = "pseudo_inverse")]
    stable_inverse: bool,
    /// Force the Moore-Penrose left inverse.
    #[arg(long)]
    pseudo_inverse: bool,
}

#[derive(Debug, Args)]
struct ReduceArgs {
    /// Plant file (kind "lti").
    input: PathBuf,
    #[arg(long, value_enum, default_value = "2")]
    approach: ApproachArg,
    #[command(flatten)]
    request: RequestArg,
    #[command(flatten)]
    grid: GridArg,
    #[command(flatten)]
    inverse: InverseArg,
    /// Reduced switched model; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Reduced continuous plant (approach 1 only).
    #[arg(long)]
    reduced_plant: Option<PathBuf>,
    /// Reduction report (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Include wall-clock stage timings in the report.
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Args)]
struct CampaignArgs {
    /// Plant file (kind "lti").
    plant: PathBuf,
    #[command(flatten)]
    grid: GridArg,
    #[command(flatten)]
    request: RequestArg,
    #[command(flatten)]
    inverse: InverseArg,
    /// Number of trials.
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Simulated time per trial.
    #[arg(long)]
    horizon: f64,
    #[arg(long)]
    out_dir: PathBuf,
    /// Worker threads.
    #[arg(long, env = "SDMOR_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Explicit eigenvalues: "re" for a real value, "re:im" for re ± i·im.
    #[arg(long, conflicts_with_all = ["unstable", "real_range", "imag_max", "complex_fraction"])]
    spectrum: Option<String>,
    /// Number of unstable real eigenvalues.
    #[arg(long, default_value_t = 0)]
    unstable: usize,
    /// Range of stable real parts, "lo,hi".
    #[arg(long, allow_hyphen_values = true)]
    real_range: Option<String>,
    #[arg(long)]
    imag_max: Option<f64>,
    #[arg(long)]
    complex_fraction: Option<f64>,
    #[arg(long)]
    coupling: Option<f64>,
    /// Sampling grid stored as "H".
    #[arg(long)]
    grid: Option<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let code = match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    };
    std::process::exit(code as i32);
}
