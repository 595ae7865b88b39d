mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use cascade_ldp::CascadeError;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cascade", version, about = "Deviation rates, moments and simulation of Mandelbrot cascades")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for the parallel parts of a run.
    #[arg(long, global = true)]
    pub threads: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Weight law: exp, gamma, two_point or degenerate.
    #[arg(long = "model")]
    pub kind: Option<String>,
    /// Shape of the gamma law.
    #[arg(long)]
    pub shape: Option<f64>,
    /// Atom at zero of the two-point law.
    #[arg(long)]
    pub p_zero: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate function of Z_r^n or Z_r^∞ on a grid, with optional breakpoints.
    Rate(RateArgs),
    /// Exact moments, chi(r), moment bounds and kappa estimates.
    Moments(MomentsArgs),
    /// Draw cascade masses and compute zero-mass probabilities.
    Simulate(SimulateArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
    /// Join a rate grid and a deviation report into one tidy CSV.
    Plotdata(PlotdataArgs),
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Tree depth, or `inf`.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub amax: Option<f64>,
    #[arg(long)]
    pub linear_step: Option<f64>,
    #[arg(long)]
    pub geometric_ratio: Option<f64>,
    /// Also locate the breakpoints a_1..a_N.
    #[arg(long)]
    pub breakpoints: Option<u64>,
    #[arg(long)]
    pub bp_tol: Option<f64>,
    /// Stabilization tolerance of the infinite-tree iteration.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_levels: Option<u64>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub r: Option<u64>,
    #[arg(long)]
    pub hmax: Option<u64>,
    /// Tree depth, or `inf` (default).
    #[arg(long)]
    pub level: Option<String>,
    /// Exact rational arithmetic.
    #[arg(long)]
    pub exact: bool,
    /// Evaluate the moment upper bound for h = 1..=BOUND_H.
    #[arg(long)]
    pub bound_h: Option<u64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub kappa_eta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub kappa_r: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub r: Option<u64>,
    /// Tree depth, or `inf` for population dynamics.
    #[arg(long)]
    pub n: Option<String>,
    /// Number of finite-tree draws.
    #[arg(long)]
    pub count: Option<u64>,
    /// Population size for the infinite tree.
    #[arg(long)]
    pub pool: Option<u64>,
    #[arg(long)]
    pub iters: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the samples as CSV.
    #[arg(long)]
    pub csv: bool,
    /// Keep intermediate population generations unnormalized.
    #[arg(long)]
    pub no_renormalize: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub pool: Option<u64>,
    #[arg(long)]
    pub iters: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub infinite_r: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct PlotdataArgs {
    /// Rate grid CSV written by `rate`.
    #[arg(long)]
    pub rate: Option<PathBuf>,
    /// Deviation or suite report JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn exit_code(e: &CascadeError) -> u8 {
    match e {
        CascadeError::Config(_) | CascadeError::Io(_) | CascadeError::Json(_) | CascadeError::Csv(_) => 2,
        CascadeError::Domain(_)
        | CascadeError::Resource(_)
        | CascadeError::MomentDivergence { .. }
        | CascadeError::NonConvergence { .. } => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli, std::env::args().collect()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
