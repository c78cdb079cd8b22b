use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::CliError;

/// Environment variable that replaces the built-in default seed.
pub const SEED_ENV: &str = "GEOLATENT_SEED";
pub const DEFAULT_SEED: u64 = 0;

pub const DEFAULT_N_TRAIN: usize = 2000;
pub const DEFAULT_N_VAL: usize = 500;
pub const DEFAULT_PURITY: (f64, f64) = (0.85, 0.95);
pub const DEFAULT_K_MLE: usize = 15;
pub const DEFAULT_K_CURV: usize = 25;
pub const DEFAULT_N_PAIRS: usize = 500;
pub const DEFAULT_OUT: &str = "run";

/// Validation records draw from streams starting here, so they never share
/// a stream with training records of the same seed.
pub const VAL_STREAM_OFFSET: u64 = 1 << 32;

/// Contents of a `--config` TOML file. Keys mirror the long flag names with
/// dashes replaced by underscores; flags take precedence.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub n_train: Option<usize>,
    pub n_val: Option<usize>,
    pub purity_min: Option<f64>,
    pub purity_max: Option<f64>,
    pub train: Option<PathBuf>,
    pub val: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub data: Option<Vec<PathBuf>>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub lambda_metric: Option<f64>,
    pub pairs_per_batch: Option<usize>,
    pub patience: Option<usize>,
    pub decoder: Option<String>,
    pub grad_method: Option<String>,
    pub hidden1: Option<usize>,
    pub hidden2: Option<usize>,
    pub latent_dim: Option<usize>,
    pub k_mle: Option<usize>,
    pub k_curv: Option<usize>,
    pub pairs: Option<usize>,
    pub lambdas: Option<Vec<f64>>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Flag, then config file, then `GEOLATENT_SEED`, then the built-in default.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

pub fn pick<T: Clone>(flag: Option<T>, file: &Option<T>, default: T) -> T {
    flag.or_else(|| file.clone()).unwrap_or(default)
}
