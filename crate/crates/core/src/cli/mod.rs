//! Command-line front end: `generate`, `train`, `analyze`, `sweep-lambda`.
//!
//! Exit codes are 0 on success, 1 for usage, configuration and file-format
//! problems, and 2 for numerical failures.

mod commands;
mod config;
mod files;

pub use commands::{analyze, generate, sweep_lambda, train, AnalysisSettings, ReportFile, SweepRow};
pub use config::{
    resolve_seed, FileConfig, DEFAULT_K_CURV, DEFAULT_K_MLE, DEFAULT_N_PAIRS, DEFAULT_N_TRAIN,
    DEFAULT_N_VAL, DEFAULT_OUT, DEFAULT_PURITY, DEFAULT_SEED, SEED_ENV, VAL_STREAM_OFFSET,
};
pub use files::{
    checkpoint_to_string, csv_bytes, dataset_to_string, load_checkpoint, load_dataset,
    save_checkpoint, save_dataset, write_atomic, Checkpoint, CheckpointHeader, Dataset,
    DatasetHeader, CHECKPOINT_FORMAT, DATASET_FORMAT, FORMAT_VERSION,
};

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
    #[error("numerical failure: {0}")]
    Numerical(Error),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn csv(e: csv::Error) -> Self {
        CliError::Format(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(msg) => CliError::Usage(msg),
            Error::Shape { .. } | Error::DimensionMismatch { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "geolatent", version, about = "Metric-preserving latent tomography for two-qubit states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample training and validation ensembles.
    Generate(GenerateArgs),
    /// Train the autoencoder and write a checkpoint and history.
    Train(TrainArgs),
    /// Geometry and correlation report for a trained checkpoint.
    Analyze(AnalyzeArgs),
    /// Train and analyze once per metric-loss weight.
    SweepLambda(SweepArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonOpts {
    /// TOML file with default settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Random seed (default from GEOLATENT_SEED, else 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run directory for inputs and outputs.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_val: Option<usize>,
    #[arg(long)]
    pub purity_min: Option<f64>,
    #[arg(long)]
    pub purity_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainOpts {
    /// Training dataset (default: <out>/train.jsonl).
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Validation dataset (default: <out>/val.jsonl).
    #[arg(long)]
    pub val: Option<PathBuf>,
    /// Maximum number of epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub lambda_metric: Option<f64>,
    #[arg(long)]
    pub pairs_per_batch: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// `corrected` or `literal`.
    #[arg(long)]
    pub decoder: Option<String>,
    /// `shift` or `fd`.
    #[arg(long)]
    pub grad_method: Option<String>,
    #[arg(long)]
    pub hidden1: Option<usize>,
    #[arg(long)]
    pub hidden2: Option<usize>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    #[command(flatten)]
    pub train: TrainOpts,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AnalysisOpts {
    /// Neighbors for the MLE dimension.
    #[arg(long)]
    pub k_mle: Option<usize>,
    /// Neighbors for local curvature.
    #[arg(long)]
    pub k_curv: Option<usize>,
    /// Random pairs for the distance correlation.
    #[arg(long)]
    pub pairs: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Checkpoint (default: <out>/checkpoint.jsonl).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Dataset files to embed (default: <out>/train.jsonl and <out>/val.jsonl).
    #[arg(long, num_args = 1..)]
    pub data: Vec<PathBuf>,
    #[command(flatten)]
    pub analysis: AnalysisOpts,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Comma-separated metric-loss weights.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub lambdas: Vec<f64>,
    #[command(flatten)]
    pub train: TrainOpts,
    #[command(flatten)]
    pub analysis: AnalysisOpts,
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => generate(&a).map(|_| ()),
        Command::Train(a) => train(&a).map(|_| ()),
        Command::Analyze(a) => analyze(&a).map(|_| ()),
        Command::SweepLambda(a) => sweep_lambda(&a).map(|_| ()),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
