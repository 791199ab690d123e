use std::path::PathBuf;

use affect_core::{AffectDim, Direction};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "affect",
    version,
    about = "Affect prediction and affect-conditioned embedding steering"
)]
pub struct Cli {
    /// Worker threads for parallel work (0 = one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Print resolved settings and progress to stderr (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    /// key=value file with defaults; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for model files when --model/--out is not given.
    #[arg(long, global = true, env = "AFFECT_MODEL_DIR", value_name = "DIR")]
    pub model_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a joint-space model or a per-channel ensemble.
    Train(TrainArgs),
    /// Score embeddings or prompt grids.
    Score(ScoreArgs),
    /// Steer prompt grids toward an affect target.
    Steer(SteerArgs),
    /// Evaluate a model on annotated data.
    Eval(EvalArgs),
    /// Export the affect penalty and its gradient for one embedding.
    PenaltyGrad(PenaltyArgs),
}

/// Lexicon plus embeddings, optionally with annotated images.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// VAD lexicon CSV.
    #[arg(long, value_name = "CSV")]
    pub lexicon: PathBuf,

    /// Container of word embeddings, `(n, 512)` or `(n, 77, 768)`.
    #[arg(long, value_name = "AEC")]
    pub embeddings: PathBuf,

    /// Container of image embeddings `(n, 512)`.
    #[arg(long, value_name = "AEC", requires = "image_vad")]
    pub images: Option<PathBuf>,

    /// VAD ratings for the images, same columns as the lexicon.
    #[arg(long, value_name = "CSV", requires = "images")]
    pub image_vad: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// 1 for a joint-space model, 77 for a per-channel ensemble.
    #[arg(long, default_value_t = 1)]
    pub channels: usize,

    /// Model file to write.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// Training report (JSON); defaults to `<out stem>.report.json`.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,

    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evaluate the test split every this many epochs (0 = never).
    #[arg(long)]
    pub eval_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,

    /// Embeddings `(n, 512)` for a joint model, grids `(n, 77, 768)` for an ensemble.
    #[arg(long, value_name = "AEC")]
    pub embeddings: PathBuf,

    /// Rows to score (repeatable); all rows when omitted.
    #[arg(long = "key", value_name = "KEY")]
    pub keys: Vec<String>,

    /// Emit JSON instead of a table.
    #[arg(long)]
    pub json: bool,

    /// Write to this file instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DimArg {
    #[value(alias = "valence")]
    V,
    #[value(alias = "arousal")]
    A,
    #[value(alias = "dominance")]
    D,
}

impl From<DimArg> for AffectDim {
    fn from(d: DimArg) -> Self {
        match d {
            DimArg::V => AffectDim::Valence,
            DimArg::A => AffectDim::Arousal,
            DimArg::D => AffectDim::Dominance,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirArg {
    High,
    Low,
}

impl From<DirArg> for Direction {
    fn from(d: DirArg) -> Self {
        match d {
            DirArg::High => Direction::High,
            DirArg::Low => Direction::Low,
        }
    }
}

#[derive(Debug, Args)]
pub struct TargetArgs {
    /// Affect dimension to push.
    #[arg(long, value_enum, ignore_case = true)]
    pub dim: DimArg,

    /// Push it to the top or bottom of the scale.
    #[arg(long, value_enum, ignore_case = true)]
    pub dir: DirArg,

    /// Weight of the affect term.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SteerArgs {
    /// Ensemble file.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,

    /// Container of prompt grids `(n, 77, 768)`.
    #[arg(long, value_name = "AEC")]
    pub anchor: PathBuf,

    /// Prompts to steer (repeatable); all rows when omitted.
    #[arg(long = "key", value_name = "PROMPT")]
    pub keys: Vec<String>,

    #[command(flatten)]
    pub target: TargetArgs,

    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Stop a channel once its gradient norm falls below this.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,

    /// Container for the steered grids.
    #[arg(long, value_name = "AEC")]
    pub out: PathBuf,

    /// Loss trace (JSON); defaults to `<out stem>.trace.json`.
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,

    /// Add to an existing output container instead of replacing it.
    #[arg(long)]
    pub append: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    /// Held-out part of the split recorded in the model file.
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,

    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,

    /// Override the split fraction recorded in the model.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Override the split seed recorded in the model.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Emit JSON instead of a table.
    #[arg(long)]
    pub json: bool,

    /// Also write the JSON report here.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PenaltyArgs {
    /// Joint-space model file.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,

    /// Container holding the embedding.
    #[arg(long, value_name = "AEC")]
    pub embeddings: PathBuf,

    /// Row to differentiate at.
    #[arg(long, value_name = "KEY")]
    pub key: String,

    #[command(flatten)]
    pub target: TargetArgs,

    /// Output container: the gradient as one row, loss in the header.
    #[arg(long, value_name = "AEC")]
    pub out: PathBuf,
}
