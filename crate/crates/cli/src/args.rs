use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eegforge_core::alterations::AlterationKind;
use eegforge_core::mvit::MvitConfig;
use eegforge_core::protocol::Arm;

#[derive(Debug, Parser)]
#[command(name = "eegforge", version, about = "Forge self-labeled EEG pre-training datasets and benchmark them")]
pub struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build one pre-training dataset per alteration, plus the labeled task set.
    Forge(ForgeArgs),
    /// Repeat pre-training then fine-tuning for every arm and report.
    Bench(BenchArgs),
    /// Pre-trained versus non-pre-trained model on the task.
    Compare(CompareArgs),
    /// Re-render the benchmark report from persisted runs.
    Report(ReportArgs),
}

fn parse_kind(s: &str) -> Result<AlterationKind, String> {
    s.parse().map_err(|e: eegforge_core::Error| e.to_string())
}

fn parse_arm(s: &str) -> Result<Arm, String> {
    s.parse().map_err(|e: eegforge_core::Error| e.to_string())
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1)"))
    }
}

#[derive(Debug, Args)]
pub struct ForgeArgs {
    /// A directory of CSV records, `synthetic`, or `synthetic:<config file>`.
    #[arg(long)]
    pub input: String,

    /// Key-value config for CSV input: window_s, stride_s, seizure labeling
    /// and cwt.* keys.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long, value_delimiter = ',', value_parser = parse_kind, default_value = "noise,shuffle,mix")]
    pub alterations: Vec<AlterationKind>,

    /// Upper bound on altered channels for white noise and mixing.
    #[arg(long, default_value_t = 5)]
    pub max_channels: usize,

    /// Share of labeled windows whose labels are dropped into the
    /// pre-training pool.
    #[arg(long, value_parser = parse_fraction, default_value = "0.7")]
    pub exclude_fraction: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelPreset {
    Eoec,
    Tusz,
}

impl ModelPreset {
    pub fn config(self) -> MvitConfig {
        match self {
            Self::Eoec => MvitConfig::eoec(),
            Self::Tusz => MvitConfig::tusz(),
        }
    }
}

/// Optimisation settings shared by `bench` and `compare`.
#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value = "eoec")]
    pub model: ModelPreset,

    #[arg(long, default_value_t = 40)]
    pub pretrain_epochs: usize,

    #[arg(long, default_value_t = 40)]
    pub finetune_epochs: usize,

    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,

    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,

    #[arg(long, default_value_t = 1e-4)]
    pub weight_decay: f64,

    /// Validation share carved from each training set.
    #[arg(long, value_parser = parse_fraction, default_value = "0.2")]
    pub val_fraction: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory written by `forge`.
    #[arg(long)]
    pub data: PathBuf,

    #[arg(long, default_value_t = 17)]
    pub repeats: usize,

    #[arg(long, value_delimiter = ',', value_parser = parse_arm, default_value = "noise,shuffle,mix,hybrid,none")]
    pub arms: Vec<Arm>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Held-out test share of the task set; 0 disables test metrics.
    #[arg(long, value_parser = parse_fraction, default_value = "0")]
    pub test_fraction: f64,

    /// Leave Hybrid out of the Pooled row.
    #[arg(long)]
    pub no_pool_hybrid: bool,

    #[arg(long, env = "EEGF_RUNS_DIR", default_value = "runs")]
    pub runs_dir: PathBuf,

    /// Suite id; results go to `<runs dir>/<suite>/<repeat>/<arm>/`.
    #[arg(long, default_value = "default")]
    pub suite: String,

    #[command(flatten)]
    pub train: TrainArgs,
}

impl BenchArgs {
    pub fn suite_dir(&self) -> PathBuf {
        self.runs_dir.join(&self.suite)
    }
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub data: PathBuf,

    /// Pre-training dataset of the PT model.
    #[arg(long, value_parser = parse_kind, default_value = "shuffle")]
    pub pretrain: AlterationKind,

    /// Stop fine-tuning after this many epochs without improvement.
    #[arg(long, default_value_t = 5)]
    pub patience: usize,

    #[arg(long, value_parser = parse_fraction, default_value = "0.2")]
    pub test_fraction: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output directory; defaults to `<runs dir>/compare`.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, env = "EEGF_RUNS_DIR", default_value = "runs")]
    pub runs_dir: PathBuf,

    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, env = "EEGF_RUNS_DIR", default_value = "runs")]
    pub runs_dir: PathBuf,

    /// Suite id; results go to `<runs dir>/<suite>/<repeat>/<arm>/`.
    #[arg(long, default_value = "default")]
    pub suite: String,

    #[arg(long)]
    pub no_pool_hybrid: bool,
}

impl ReportArgs {
    pub fn suite_dir(&self) -> PathBuf {
        self.runs_dir.join(&self.suite)
    }
}
