//! `hfbi`: participation-log analyses from the command line.
//!
//! Every command writes JSON/CSV artifacts plus `manifest.json` into `--out`.
//! Exit codes: 0 success, 1 other failure, 2 usage, 3 unreadable or invalid
//! input log, 4 fit failure, 5 invalid model parameters, 6 reproducibility
//! mismatch.

mod artifacts;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hfbi_core::hfbi::Kernel;
use hfbi_core::seed::DEFAULT_SEED;

#[derive(Parser, Debug)]
#[command(name = "hfbi", version, about = "Habit and inertia analyses of participation logs")]
pub struct Cli {
    /// Output directory (created if absent)
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Master seed for all randomness
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a discrete power law to participation counts
    Fit(FitArgs),
    /// Generate a synthetic log from the model
    Simulate(SimulateArgs),
    /// Calibrate the habit weight alpha by grid search
    Calibrate(CalibrateArgs),
    /// Propensity curves by participation history and by absence
    Evidence(EvidenceArgs),
    /// Bursts of closely spaced attendances and incentive positions
    Bursts(BurstsArgs),
    /// Compare the habit-only exponent with a simulated fit
    Theory(TheoryArgs),
    /// Check an input log, or re-run a manifest and compare outputs
    Validate(ValidateArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Reciprocal,
    Exponential,
}

impl From<KernelArg> for Kernel {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Reciprocal => Kernel::Reciprocal,
            KernelArg::Exponential => Kernel::Exponential,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scope {
    Loyal,
    All,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Only use activities 0..=UPTO
    #[arg(long)]
    pub upto: Option<u32>,
    #[arg(long, default_value_t = 1000)]
    pub n_boot: usize,
    #[arg(long, default_value_t = 0.1)]
    pub p_threshold: f64,
    /// Also fit every activity node once the population reaches --threshold
    #[arg(long)]
    pub per_node: bool,
    #[arg(long, default_value_t = 1000)]
    pub threshold: usize,
    /// Analyse every STRIDE-th node (the last node is always included)
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Take n, c and m from this log instead of the flags
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 731)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub c: usize,
    #[arg(long, default_value_t = 33)]
    pub m: usize,
    #[arg(long, default_value_t = 0.9)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = KernelArg::Reciprocal)]
    pub kernel: KernelArg,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub upto: Option<u32>,
    #[arg(long, value_enum, default_value_t = KernelArg::Reciprocal)]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    /// Also calibrate every activity node once the population reaches --threshold
    #[arg(long)]
    pub per_node: bool,
    #[arg(long, default_value_t = 1000)]
    pub threshold: usize,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
}

#[derive(Args, Debug)]
pub struct EvidenceArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub upto: Option<u32>,
    /// Smoothing window in points
    #[arg(long, default_value_t = 20)]
    pub window: usize,
    /// Minimum exposure for points entering the trend statistic
    #[arg(long, default_value_t = 30)]
    pub min_exposure: u64,
}

#[derive(Args, Debug)]
pub struct BurstsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub upto: Option<u32>,
    /// Gap thresholds, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [8u32, 9, 10])]
    pub delta: Vec<u32>,
    /// Loyal users attend strictly more than this many activities
    #[arg(long, default_value_t = 100)]
    pub min_count: usize,
    #[arg(long, value_enum, default_value_t = Scope::Loyal)]
    pub scope: Scope,
    /// Fit a power law to each loyal user's intervals
    #[arg(long)]
    pub fit_intervals: bool,
    #[arg(long, default_value_t = 1000)]
    pub n_boot: usize,
}

#[derive(Args, Debug)]
pub struct TheoryArgs {
    #[arg(long, default_value_t = 1)]
    pub c: usize,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 50_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub n_boot: usize,
    /// Reported as met when |fitted - predicted| is within this
    #[arg(long, default_value_t = 0.1)]
    pub tolerance: f64,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct ValidateArgs {
    /// Log to check for ingestion errors
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Manifest of an earlier run to repeat
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args: Vec<String> = std::env::args().skip(1).collect();
    match commands::run(cli, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use hfbi_core::Error as E;
    for cause in err.chain() {
        if cause.downcast_ref::<commands::Mismatch>().is_some() {
            return 6;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                _ if e.is_ingestion_failure() => 3,
                _ if e.is_fit_failure() => 4,
                E::InvalidParams(_) => 5,
                E::InvalidArgument(_) | E::ActivityOutOfRange { .. } | E::PopulationTooLarge { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

pub fn parse_from(args: &[String]) -> Result<Cli> {
    let argv = std::iter::once("hfbi".to_owned()).chain(args.iter().cloned());
    Ok(Cli::try_parse_from(argv)?)
}
