use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "maxmin", version, about = "Minimize the maximum of convex losses and measure oracle complexity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance and record the run.
    Solve(SolveArgs),
    /// Run a parameter grid and fit a log-log slope.
    Scaling(ScalingArgs),
    /// Run property suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InstanceKind {
    Hard,
    LinearCsv,
    Duplicated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    BrooSgd,
    BrooKatyusha,
    Exact,
    Subgradient,
    AgdSoftmax,
}

impl MethodArg {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::BrooSgd => "broo-sgd",
            Self::BrooKatyusha => "broo-katyusha",
            Self::Exact => "exact",
            Self::Subgradient => "subgradient",
            Self::AgdSoftmax => "agd-softmax",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, value_enum, default_value = "hard")]
    pub instance: InstanceKind,
    #[arg(long, value_enum, default_value = "broo-katyusha")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of components.
    #[arg(long = "N", default_value_t = 32)]
    pub n: usize,
    /// Chain length of hard and duplicated instances.
    #[arg(long = "T", default_value_t = 6)]
    pub t: usize,
    /// Link smoothness of hard and duplicated instances.
    #[arg(long, default_value_t = 16.0)]
    pub ell: f64,
    /// Cap on the embedding dimension of hard instances.
    #[arg(long)]
    pub d_cap: Option<usize>,
    /// Linear instance file for `--instance linear-csv`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Distance bound R; defaults to the instance's own bound, or 1.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Stop after this many full passes over the data.
    #[arg(long)]
    pub max_passes: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Append the record to this file instead of printing it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sweep {
    /// Oracle ball radius; fits outer iterations.
    R,
    /// Target accuracy; fits outer iterations.
    Eps,
    /// Number of components; fits full passes.
    #[value(name = "N")]
    N,
}

#[derive(Debug, Clone, Args)]
pub struct ScalingArgs {
    #[arg(long, value_enum)]
    pub sweep: Sweep,
    /// Comma separated grid values.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to"])]
    pub grid: Option<Vec<f64>>,
    /// Geometric grid start.
    #[arg(long, requires = "to")]
    pub from: Option<f64>,
    /// Geometric grid end.
    #[arg(long, requires = "from")]
    pub to: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub points: usize,
    #[command(flatten)]
    pub run: RunArgs,
    /// Per-point records (CSV).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fit summary (JSON); printed to stdout when absent.
    #[arg(long)]
    pub fit_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Deliberately break a computation to check that the suites fail.
    #[arg(long, hide = true)]
    pub inject_fault: Option<String>,
}
