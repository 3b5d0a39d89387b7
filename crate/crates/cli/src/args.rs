use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conformal_stl::opt::{Algorithm, LossKind};

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "CSTL_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "cstl", version, about = "Mine signal temporal logic predicates with conformal robustness intervals")]
pub struct Cli {
    /// Experiment configuration (TOML). Flags override file values.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic trajectory dataset.
    Gen(GenArgs),
    /// Run one trial and save the mined predicate.
    Mine(MineArgs),
    /// Run repeated trials for optimizers and ablations.
    Trials(TrialsArgs),
    /// Emit sampled validation intervals as CSV.
    Plotdata(PlotArgs),
    /// Recompute metrics for a saved predicate.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub waypoints: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Observation noise standard deviation.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Observed fraction of each trajectory.
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Gp,
    Mc,
    Ge,
    Ce,
}

impl From<OptimizerArg> for Algorithm {
    fn from(o: OptimizerArg) -> Self {
        match o {
            OptimizerArg::Gp => Algorithm::GeneticProgramming,
            OptimizerArg::Mc => Algorithm::MonteCarlo,
            OptimizerArg::Ge => Algorithm::GrammaticalEvolution,
            OptimizerArg::Ce => Algorithm::CrossEntropy,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Linear,
    Telex,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Linear => LossKind::Linear,
            LossArg::Telex => LossKind::Telex,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Ablation {
    Telex,
    Linear,
    NoTrivial,
    NoIntervals,
}

/// Overrides shared by the commands that run trials.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// Trajectory file (JSONL or CSV). Generated from the config when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Neighbors for the kNN quantile regressors.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub w: Option<f64>,
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub a2: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerArg>,
    /// Optimize over median point predictions instead of intervals.
    #[arg(long)]
    pub no_intervals: bool,
    #[arg(long, default_value = "predicate.json")]
    pub out: PathBuf,
    /// Convergence log (CSV).
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrialsArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Trials per configuration.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub optimizers: Vec<OptimizerArg>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub ablations: Vec<Ablation>,
    #[arg(long, default_value = "results")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub predicate: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 40)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub predicate: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Score every trajectory instead of the predicate's validation split.
    #[arg(long)]
    pub all: bool,
    /// Write metrics as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
