//! `ballopt`: volumes, norms and volume-minimizing forms from the command line.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 infinite volume,
//! 4 verification failure, 1 numerical failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const DEFAULT_SEED: u64 = 1234567;

#[derive(Parser, Debug)]
#[command(name = "ballopt", version, about = "Sublevel-set volumes and volume-minimizing forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate vol{f ≤ 1} for a form
    Volume(VolumeArgs),
    /// Evaluate a norm of a form or Gram matrix
    Norm(NormArgs),
    /// Minimize the volume over a norm ball
    Optimize(OptimizeArgs),
    /// Check the closed-form lower bounds on random feasible points
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    /// (x₁² + … + x_n²)^{d/2}
    Ball,
    /// x₁^d + … + x_n^d
    Powers,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Random seed; runs with equal seeds produce identical output
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct Source {
    /// Form or Gram matrix JSON file
    #[arg(long, conflicts_with = "builtin")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    /// Number of variables (builtins)
    #[arg(long)]
    pub n: Option<usize>,
    /// Degree (builtins)
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Closed form when available, spherical Monte Carlo otherwise
    Auto,
    Laplace,
    Spherical,
}

#[derive(Args, Debug)]
pub struct VolumeArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormKind {
    Bombieri,
    L1,
    Lp,
    Sup,
    /// Minimum on the sphere (an upper bound)
    Min,
    Schatten,
    Spectral,
}

#[derive(Args, Debug)]
pub struct NormArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum)]
    pub kind: NormKind,
    /// Exponent for lp and schatten (`inf` allowed for schatten)
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Restarts for sup and min searches
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    /// Ascent iterations per restart for sup and min searches
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    /// Form norm: bombieri or l1
    #[arg(long, conflicts_with = "sos")]
    pub norm: Option<String>,
    /// Optimize over Gram matrices in a Schatten ball instead
    #[arg(long)]
    pub sos: bool,
    /// Schatten exponent for --sos: 1, 2 or inf
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 150)]
    pub iters: usize,
    /// Monte-Carlo samples per gradient
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    /// Length of the first step
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
    /// Start from a form file instead of the ball form (form norms only)
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Single norm (bombieri, lp:p, sup, nuclear, schatten:p, spectral);
    /// the full matrix when omitted
    #[arg(long)]
    pub norm: Option<String>,
    #[arg(long, requires = "norm")]
    pub n: Option<usize>,
    #[arg(long, requires = "norm")]
    pub d: Option<usize>,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    /// Relative slack below the bound before a trial counts as a violation
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Monte-Carlo samples per volume and norm estimate
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    /// Multiply the bound (values above 1 exercise the failure path)
    #[arg(long, default_value_t = 1.0)]
    pub bound_factor: f64,
    #[command(flatten)]
    pub common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Volume(a) => &a.common,
        Command::Norm(a) => &a.common,
        Command::Optimize(a) => &a.common,
        Command::Verify(a) => &a.common,
    };
    if let Some(threads) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Volume(a) => commands::volume(a),
        Command::Norm(a) => commands::norm(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(outcome) => {
            if let Some(msg) = &outcome.message {
                eprintln!("{msg}");
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
