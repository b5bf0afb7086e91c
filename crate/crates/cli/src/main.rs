//! `gftbench` — spectral graph filter workbench.
//!
//! One executable with subcommands for amplification profiles, training,
//! bound reports, bound-vs-gap sweeps, regularizer ablations, Jacobian
//! tightness checks, and a dataset-free selftest.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod output;
mod resolve;
mod selftest;

#[derive(Parser)]
#[command(name = "gftbench", version, about = "Spectral graph filter workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Emit amplification profile tables M_K(x) for plotting
    Profile(ProfileArgs),
    /// Compute a bound report for a trained checkpoint on a graph
    Bounds(BoundsArgs),
    /// Train one model and write metrics plus a checkpoint
    Train(TrainArgs),
    /// Bound-vs-gap sweep over bases, orders, depths, and split seeds
    Sweep(SweepArgs),
    /// Regularizer ablation table (base vs best-regularized per basis)
    Ablate(AblateArgs),
    /// Measure true Jacobian norm against its bound for one model
    Jacobian(JacobianArgs),
    /// Run the built-in invariant suites (no dataset needed)
    Selftest(SelftestArgs),
}

/// Flags shared by every subcommand. Anything left unset falls back to the
/// `--config` file and then to built-in defaults (flags > config file >
/// defaults).
#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// Top-level RNG seed (splits, init, dropout)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; without it, results go to stdout and no files are
    /// written
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Graph bundle directory (edges.tsv / features.csv / labels.csv)
    #[arg(long, conflicts_with = "sbm")]
    pub graph: Option<PathBuf>,
    /// Synthetic SBM: "default", "heterophilous", or key=value list
    /// (blocks, per_block, p_in, p_out, d0, signal, seed)
    #[arg(long)]
    pub sbm: Option<String>,
    /// Basis: monomial|chebyshev|legendre|bernstein, or "all"
    #[arg(long)]
    pub basis: Option<String>,
    /// Evaluate bases rescaled to unit worst-case amplification
    #[arg(long)]
    pub rescaled: bool,
    /// Polynomial filter order K
    #[arg(long)]
    pub order: Option<usize>,
    /// Number of stacked filter layers
    #[arg(long)]
    pub layers: Option<usize>,
    /// Energy-weighted penalty strength
    #[arg(long = "lambda-ew")]
    pub lambda_ew: Option<f64>,
    /// key=value config file; explicit flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads for sweeps/ablations (default 1, fully streamed)
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of grid points on [-1, 1]
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Trained checkpoint to evaluate
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Confidence parameter δ of the gap bound
    #[arg(long)]
    pub delta: Option<f64>,
    /// Absolute constant C₁ (partition term)
    #[arg(long)]
    pub c1: Option<f64>,
    /// Absolute constant C₂ (confidence term)
    #[arg(long)]
    pub c2: Option<f64>,
    /// Labeled nodes per class used for the m in the gap bound
    #[arg(long = "per-class")]
    pub per_class: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelFlags,
}

/// Architecture and optimizer knobs shared by the training commands.
#[derive(Args, Debug, Default)]
pub struct ModelFlags {
    /// Hidden dimension of the MLP wrapper
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Filter-layer activation: identity|relu
    #[arg(long)]
    pub activation: Option<String>,
    /// Dropout on input features and after the filter block
    #[arg(long)]
    pub dropout1: Option<f64>,
    /// Dropout on hidden features after the first relu
    #[arg(long)]
    pub dropout2: Option<f64>,
    /// Learning rate
    #[arg(long)]
    pub lr: Option<f64>,
    /// Decoupled weight decay
    #[arg(long = "weight-decay")]
    pub weight_decay: Option<f64>,
    /// Maximum training epochs
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Early-stopping patience (epochs without validation improvement)
    #[arg(long)]
    pub patience: Option<usize>,
    /// Labeled training nodes per class
    #[arg(long = "per-class")]
    pub per_class: Option<usize>,
    /// Fraction of the remaining nodes used for validation
    #[arg(long = "val-frac")]
    pub val_frac: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Orders to sweep: "1..10" (inclusive) or a comma list
    #[arg(long)]
    pub orders: Option<String>,
    /// Bases to sweep: "all" or a comma list
    #[arg(long)]
    pub bases: Option<String>,
    /// Split seeds: a count ("10" → 0..9) or a comma list
    #[arg(long)]
    pub seeds: Option<String>,
    /// Depths to sweep: comma list of filter-layer counts
    #[arg(long = "layer-list")]
    pub layer_list: Option<String>,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Bases to ablate: "all" or a comma list
    #[arg(long)]
    pub bases: Option<String>,
    /// Split seeds: a count or a comma list
    #[arg(long)]
    pub seeds: Option<String>,
    /// Penalty grid: comma list, must contain 0
    #[arg(long = "lambda-grid")]
    pub lambda_grid: Option<String>,
}

#[derive(Args, Debug)]
pub struct JacobianArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Evaluate an existing checkpoint instead of training anew
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Separates "you called it wrong" (exit 1) from "it failed while
/// running" (exit 2).
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
