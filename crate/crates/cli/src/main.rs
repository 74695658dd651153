//! `irsc`: construct, optimize, census, tune and simulate irregular
//! spatially-coupled LDPC codes.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const THREADS_ENV: &str = "IRSC_THREADS";

#[derive(Parser)]
#[command(
    name = "irsc",
    version,
    about = "Irregular spatially-coupled LDPC code design"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the coupled parity-check matrix and report its degrees.
    Construct(ConstructArgs),
    /// Search partitionings that minimize protograph cycles-6.
    Optimize(OptimizeArgs),
    /// Count cycles-4 or cycles-6.
    Census(CensusArgs),
    /// Tune circulant powers to remove lifted cycles-6.
    Tune(TuneArgs),
    /// Frame error rate under AWGN with min-sum decoding.
    Simulate(SimulateArgs),
}

/// A code described by its partitioning matrix and circulant powers.
#[derive(Args, Debug, Clone)]
pub struct CodeArgs {
    /// Partitioning matrix file (`X`, `0`, `1`, ...).
    #[arg(long)]
    pub pm: PathBuf,
    /// Circulant power matrix file; array-based powers when omitted.
    #[arg(long)]
    pub cm: Option<PathBuf>,
    /// Circulant size; defaults to kappa.
    #[arg(long)]
    pub z: Option<usize>,
    /// Coupling length.
    #[arg(long = "L", default_value_t = 10)]
    pub coupling_length: usize,
    /// Memory; inferred from the largest label when omitted.
    #[arg(long)]
    pub memory: Option<usize>,
    /// Expected number of row groups, checked against the matrices.
    #[arg(long)]
    pub gamma: Option<usize>,
    /// Expected number of column groups, checked against the matrices.
    #[arg(long)]
    pub kappa: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Mode {
    Exhaustive,
    Annealing,
    CoordinateDescent,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    /// Partitioning matrix whose `X` pattern is kept.
    #[arg(long, conflicts_with_all = ["lambda", "phi"])]
    pub pm: Option<PathBuf>,
    /// Variable-node degree fractions, degree 1 first (e.g. `0,0,8/13,5/13`).
    #[arg(long, requires_all = ["phi", "gamma", "kappa"])]
    pub lambda: Option<String>,
    /// Interior check-node degree fractions, degree 1 first.
    #[arg(long, requires = "lambda")]
    pub phi: Option<String>,
    #[arg(long)]
    pub gamma: Option<usize>,
    #[arg(long)]
    pub kappa: Option<usize>,
    #[arg(long = "L", default_value_t = 10)]
    pub coupling_length: usize,
    #[arg(long, value_enum, default_value_t = Mode::Annealing)]
    pub mode: Mode,
    /// Maximum objective evaluations.
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u64,
    /// Largest allowed difference between H_0 and H_1 circulant counts.
    #[arg(long = "balance-tol", default_value_t = 2)]
    pub balance_tol: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CensusScope {
    Protograph,
    Lifted,
}

#[derive(Args, Debug)]
pub struct CensusArgs {
    #[arg(long, required_unless_present = "alist")]
    pub pm: Option<PathBuf>,
    #[arg(long, conflicts_with = "alist")]
    pub cm: Option<PathBuf>,
    #[arg(long)]
    pub z: Option<usize>,
    #[arg(long = "L", default_value_t = 10)]
    pub coupling_length: usize,
    #[arg(long)]
    pub memory: Option<usize>,
    /// Count directly on a parity-check matrix in alist format.
    #[arg(long, conflicts_with = "pm")]
    pub alist: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = CensusScope::Lifted)]
    pub scope: CensusScope,
    /// Cycle length, 4 or 6.
    #[arg(long, default_value_t = 6)]
    pub length: usize,
    /// Write the JSON census here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long = "max-rounds", default_value_t = 1000)]
    pub max_rounds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Perturb-and-descend restarts after the first local minimum.
    #[arg(long, default_value_t = 0)]
    pub restarts: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Parity-check matrices to simulate; several give a comparison CSV.
    #[arg(long, conflicts_with = "pm")]
    pub alist: Vec<PathBuf>,
    #[arg(long)]
    pub pm: Option<PathBuf>,
    #[arg(long, requires = "pm")]
    pub cm: Option<PathBuf>,
    #[arg(long, requires = "pm")]
    pub z: Option<usize>,
    #[arg(long = "L", default_value_t = 10)]
    pub coupling_length: usize,
    #[arg(long)]
    pub memory: Option<usize>,
    /// Eb/N0 points in dB, comma separated; `inf` is noiseless.
    #[arg(long, value_delimiter = ',', required = true)]
    pub snr: Vec<String>,
    #[arg(long, default_value_t = 15)]
    pub iters: usize,
    #[arg(long = "max-frames", default_value_t = 100_000)]
    pub max_frames: u64,
    #[arg(long = "min-errors", default_value_t = 100)]
    pub min_errors: u64,
    /// Min-sum check-node scaling in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub normalization: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output file.
    #[arg(long)]
    pub out: PathBuf,
}

/// How a command ended, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input or parameters: exit 2.
    Validation(String),
    /// File system trouble: exit 1.
    Io(String),
}

impl From<irsc_core::Error> for Failure {
    fn from(e: irsc_core::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

pub enum Outcome {
    Complete,
    /// A budget stopped the run; the written result is the best found.
    Partial(String),
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| Failure::Validation(format!("{THREADS_ENV}={value} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Validation(format!("{THREADS_ENV}: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Construct(a) => commands::construct(&a),
        Command::Optimize(a) => commands::optimize(&a),
        Command::Census(a) => commands::census(&a),
        Command::Tune(a) => commands::tune(&a),
        Command::Simulate(a) => commands::simulate(&a),
    });
    match result {
        Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::Partial(why)) => {
            eprintln!("warning: {why}");
            ExitCode::from(3)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
