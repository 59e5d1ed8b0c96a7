use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sogcn_core::models::{Activation, LayerKind, Readout};
use sogcn_core::FilterKind;

#[derive(Debug, Parser)]
#[command(name = "sogcn", version, about = "Spectral graph convolution lab")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Generate SGS train/val/test splits.
    GenData(GenDataArgs),
    /// Train a network and write a checkpoint and history.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset split.
    Eval(EvalArgs),
    /// Train each model kind at each depth and report test MAE.
    SweepDepth(SweepArgs),
    /// Export graph spectra of a sample's activations.
    Spectrum(SpectrumArgs),
    /// Factor a polynomial filter into a quadratic cascade.
    Factorize(FactorizeArgs),
    /// Dimension of the layer spanning space over a graph set.
    LssDim(LssDimArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenDataArgs {
    /// Target filter: hp, lp or bp.
    #[arg(long)]
    pub kind: FilterKind,
    #[arg(long, default_value_t = 1000)]
    pub train: usize,
    #[arg(long, default_value_t = 1000)]
    pub val: usize,
    #[arg(long, default_value_t = 2000)]
    pub test: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// Convolution kernel: vanilla, gin, so or korderK.
    #[arg(long, default_value = "so")]
    pub layer: LayerKind,
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    /// Hidden channels.
    #[arg(long, default_value_t = 16)]
    pub hidden: usize,
    #[arg(long, value_enum, default_value = "identity")]
    pub activation: ActivationArg,
    /// Shared GRU after every convolution.
    #[arg(long)]
    pub gru: bool,
    #[arg(long, value_enum, default_value = "node-mlp")]
    pub readout: ReadoutArg,
    /// Hidden widths of the embedding MLP, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub embed_hidden: Vec<usize>,
    /// Hidden widths of the readout MLP, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub readout_hidden: Vec<usize>,
    /// Biases in the embedding and readout MLPs.
    #[arg(long)]
    pub bias: bool,
    /// Initialization seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationArg {
    Identity,
    Relu,
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Identity => Activation::Identity,
            ActivationArg::Relu => Activation::Relu,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutArg {
    NodeMlp,
    GraphSum,
}

impl From<ReadoutArg> for Readout {
    fn from(r: ReadoutArg) -> Self {
        match r {
            ReadoutArg::NodeMlp => Readout::NodeMlp,
            ReadoutArg::GraphSum => Readout::GraphSum,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ScheduleArgs {
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub min_lr: f64,
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
    /// Shuffle seed.
    #[arg(long, default_value_t = 0)]
    pub train_seed: u64,
    /// Ordered gradient reductions for bit-identical runs.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Dataset directory written by gen-data.
    #[arg(long)]
    pub data: PathBuf,
    /// Run directory for checkpoint, history and manifest.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitArg {
    Train,
    Val,
    Test,
}

impl From<SplitArg> for sogcn_core::sgs::Split {
    fn from(s: SplitArg) -> Self {
        use sogcn_core::sgs::Split;
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Val => Split::Val,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Depths to train, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
    pub depths: Vec<usize>,
    /// Layer kinds to train, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "vanilla,gin,so,korder4")]
    pub models: Vec<LayerKind>,
    #[arg(long, default_value_t = 16)]
    pub hidden: usize,
    /// Initialization seed shared by every run.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    /// Sample index within the split.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FactorizeArgs {
    /// Coefficients, constant term first, comma separated.
    #[arg(allow_hyphen_values = true, required_unless_present = "file")]
    pub coeffs: Option<String>,
    /// Read the coefficients from a file instead.
    #[arg(long, conflicts_with = "coeffs")]
    pub file: Option<PathBuf>,
    /// Largest accepted relative re-expansion error.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LssDimArgs {
    /// Graph list, one JSON record per line.
    #[arg(long)]
    pub graphs: PathBuf,
    /// Polynomial order K.
    #[arg(long)]
    pub order: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
