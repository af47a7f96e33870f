mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

/// Dynamic-preference network-management toolkit.
#[derive(Debug, Parser)]
#[command(name = "prefnet", version, about)]
struct Cli {
    /// TOML or JSON file with defaults for the subcommand; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a dataset (train/val/test + calibrated SLA).
    GenData(GenDataArgs),
    /// Train fixed-preference baselines over a grid.
    PretrainGrid(PretrainGridArgs),
    /// Fit the exponential preference distribution from grid effects.
    FitDist(FitDistArgs),
    /// Train an agent (dynamic preference, or fixed for a baseline).
    Train(TrainArgs),
    /// Evaluate checkpoints at static preferences.
    EvalStatic(EvalStaticArgs),
    /// Evaluate checkpoints with per-episode preferences from a distribution.
    EvalDynamic(EvalDynamicArgs),
    /// Play a timeline of preference changes and node failures.
    Scenario(ScenarioArgs),
    /// Run the steering service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenDataArgs {
    /// Topology name (toy, internet2, mec) or JSON file.
    #[arg(long)]
    pub topology: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Time steps to generate (ignored with --trace).
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Traffic-matrix trace file instead of synthetic traffic.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Mean total traffic intensity per step (≈ requests per step).
    #[arg(long)]
    pub mean_total: Option<f64>,
    /// Fraction of (node, type) cells perturbed after greedy placement.
    #[arg(long)]
    pub perturb: Option<f64>,
    /// Full generator configuration (config file only).
    #[arg(skip)]
    pub generator: Option<prefnet::datagen::GenConfig>,
}

/// Model and optimizer knobs shared by the training commands.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainKnobs {
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub update_interval: Option<usize>,
    #[arg(long)]
    pub episode_len: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub minibatch: Option<usize>,
    /// Hidden width d.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// GGNN propagation steps T.
    #[arg(long)]
    pub steps: Option<usize>,
    /// sgd or adam.
    #[arg(long)]
    pub optimizer: Option<String>,
    /// Complete PPO settings (config file only); flags above still win.
    #[arg(skip)]
    pub ppo: Option<prefnet::rl::PpoConfig>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainGridArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// as or pm.
    #[arg(long)]
    pub task: Option<String>,
    /// α grid (comma separated); auto-scaling.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Vec<f64>,
    /// β grid (comma separated); power management, with --alpha fixed.
    #[arg(long, value_delimiter = ',')]
    pub betas: Vec<f64>,
    /// Fixed α for a β grid.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub knobs: TrainKnobs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitDistArgs {
    /// Output directory of pretrain-grid.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Dataset to measure effects on (test split); defaults to the grid's.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// JSON list of {preference, effect} samples instead of a grid.
    #[arg(long)]
    pub effects: Option<PathBuf>,
    /// vnf (α) or power (β).
    #[arg(long)]
    pub effect: Option<String>,
    /// Fit V_max jointly instead of pinning it to the largest effect.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub joint_vmax: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// as or pm.
    #[arg(long)]
    pub task: Option<String>,
    /// α distribution spec, e.g. exp:145.45, unif:0:0.05, point:0.01.
    #[arg(long)]
    pub dist: Option<String>,
    /// β distribution spec (power management).
    #[arg(long)]
    pub beta_dist: Option<String>,
    /// Train a static baseline at this α instead of sampling.
    #[arg(long)]
    pub fixed_alpha: Option<f64>,
    /// β of a static power-management baseline.
    #[arg(long)]
    pub fixed_beta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Validate on the val split every this many iterations.
    #[arg(long)]
    pub validate_every: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub knobs: TrainKnobs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalStaticArgs {
    /// Checkpoint files (repeatable).
    #[arg(long = "checkpoint")]
    pub checkpoints: Vec<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// α settings (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub alphas: Vec<f64>,
    /// Derive α settings from quantiles of this distribution instead.
    #[arg(long)]
    pub dist: Option<String>,
    /// Quantile levels for --dist; defaults to 0.2,0.4,0.6,0.8,0.99.
    #[arg(long, value_delimiter = ',')]
    pub quantiles: Vec<f64>,
    /// β for power-management agents.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalDynamicArgs {
    #[arg(long = "checkpoint")]
    pub checkpoints: Vec<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long)]
    pub beta_dist: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Scenario JSON: {"events": [{"t", "kind", ...}]}.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Preference before the first event.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// train, val or test (default).
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// name=path (repeatable).
    #[arg(long = "checkpoint")]
    pub checkpoints: Vec<String>,
    #[arg(long)]
    pub addr: Option<String>,
    #[arg(long)]
    pub tick_ms: Option<u64>,
    #[arg(long)]
    pub split: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli.config.as_deref(), cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(commands::Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
