use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "perturbench", version, about = "Two-factor image corruption suites and robustness analysis")]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, env = "PERTURBENCH_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Output path; its meaning depends on the subcommand.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Encoding of summaries and tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Write a 69-group suite and its manifest into --out.
    Generate(GenerateArgs),
    /// Re-hash a suite against its manifest.
    Verify(VerifyArgs),
    /// Train the baseline classifier on a corrupted training set; writes the model to --out.
    Train(TrainArgs),
    /// Score a model on every group of a suite; writes predictions and a summary into --out.
    Evaluate(EvaluateArgs),
    /// Summarise an externally produced predictions CSV.
    Ingest(IngestArgs),
    /// Category aggregates and correlation table over summaries.
    Analyze(AnalyzeArgs),
    /// Mean-accuracy vs. CV scatter plot as SVG.
    Plot(PlotArgs),
    /// Run the nine training runs on synthetic data and report them.
    Protocol(ProtocolArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingArg {
    Sequential,
    Shuffled,
}

#[derive(Debug, Args, Serialize)]
#[group(skip)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["synthetic", "cifar"])))]
pub struct SourceArgs {
    /// Use the built-in synthetic shape dataset.
    #[arg(long)]
    pub synthetic: bool,

    /// CIFAR-10 binary batch file(s), concatenated in the order given.
    #[arg(long, value_name = "PATH")]
    pub cifar: Vec<PathBuf>,

    /// Synthetic dataset size; defaults to skip + n.
    #[arg(long, requires = "synthetic")]
    pub pool: Option<usize>,

    #[arg(long, value_enum, default_value_t = SamplingArg::Sequential)]
    pub sampling: SamplingArg,

    /// Source images to pass over before drawing.
    #[arg(long, default_value_t = 0)]
    pub skip: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// Images per group.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,

    /// Generate groups one at a time instead of on the thread pool.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub suite: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    /// Training images.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,

    /// Group whose chain corrupts the training images, e.g. SP0.1GA0.1.
    #[arg(long, default_value = "clean")]
    pub group: String,

    /// Suite whose source images must not be reused for training.
    #[arg(long)]
    pub suite: Option<PathBuf>,

    #[arg(long, default_value_t = 20)]
    pub epochs: usize,

    #[arg(long, default_value_t = 0.05)]
    pub learning_rate: f64,

    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,

    #[arg(long, default_value_t = 25)]
    pub batch_size: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct RunLabelArgs {
    /// Classifier name used in labels such as softmax(SP0.1).
    #[arg(long, default_value = "softmax")]
    pub classifier: String,

    /// Group the classifier was trained on.
    #[arg(long)]
    pub training_group: String,

    /// Summary JSON holding the same classifier's clean-trained run; needed
    /// unless --training-group is clean.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,

    #[arg(long)]
    pub suite: PathBuf,

    #[command(flatten)]
    pub run: RunLabelArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Predictions CSV (group_id,image_index,true_label,predicted_label).
    #[arg(long)]
    pub predictions: PathBuf,

    #[command(flatten)]
    pub run: RunLabelArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Summary JSON reports and/or flat summary tables (.csv).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PlotArgs {
    /// Summary JSON reports and/or flat summary tables (.csv).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,

    /// Label of the reference run, e.g. "AlexNet(clean)".
    #[arg(long)]
    pub reference: String,

    /// Plot only this classifier's runs.
    #[arg(long)]
    pub classifier: Option<String>,

    #[arg(long, default_value_t = 800.0)]
    pub width: f64,

    #[arg(long, default_value_t = 600.0)]
    pub height: f64,

    /// Fixed CV axis range as LO,HI.
    #[arg(long, value_parser = parse_range)]
    pub x_range: Option<(f64, f64)>,

    /// Fixed mean-accuracy axis range as LO,HI.
    #[arg(long, value_parser = parse_range)]
    pub y_range: Option<(f64, f64)>,

    #[arg(long)]
    pub no_whiskers: bool,

    #[arg(long)]
    pub no_clean_ring: bool,

    #[arg(long, default_value_t = 4.0)]
    pub marker_radius: f64,

    #[arg(long, default_value_t = 12.0)]
    pub font_size: f64,

    #[arg(long)]
    pub title: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct ProtocolArgs {
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub test_images: u64,

    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub train_images: u64,

    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad number {lo:?}"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad number {hi:?}"))?;
    if lo >= hi || lo.is_nan() || hi.is_nan() {
        return Err("LO must be below HI".into());
    }
    Ok((lo, hi))
}
