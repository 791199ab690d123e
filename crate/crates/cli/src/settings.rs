//! `key = value` config files. Blank lines and `#` comments are ignored.
//! A value given on the command line always wins over the file, which wins
//! over the built-in default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use affect_core::{SteeringConfig, TrainConfig};

use crate::error::{usage, CliError, CliResult};

pub const KEYS: &[&str] = &[
    "threads",
    "model-dir",
    "epochs",
    "dropout",
    "train-fraction",
    "lr",
    "batch-size",
    "seed",
    "eval-every",
    "lambda",
    "steer-lr",
    "max-steps",
    "tol",
];

#[derive(Debug, Default)]
pub struct FileSettings {
    path: Option<PathBuf>,
    values: BTreeMap<String, String>,
}

impl FileSettings {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
        Self::parse(&text, Some(path.to_path_buf()))
    }

    pub fn parse(text: &str, path: Option<PathBuf>) -> CliResult<Self> {
        let name = path
            .as_deref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "config".into());
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return usage(format!("{name}:{}: expected key = value", n + 1));
            };
            let key = k.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return usage(format!(
                    "{name}:{}: unknown key `{}` (known: {})",
                    n + 1,
                    k.trim(),
                    KEYS.join(", ")
                ));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { path, values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                let name = self
                    .path
                    .as_deref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| "config".into());
                CliError::Usage(format!("{name}: bad value `{v}` for `{key}`"))
            }),
        }
    }

    /// Flag if given, else the file, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }
}

pub struct TrainFlags {
    pub epochs: Option<usize>,
    pub dropout: Option<f64>,
    pub train_fraction: Option<f64>,
    pub lr: Option<f64>,
    pub batch_size: Option<usize>,
    pub seed: Option<u64>,
    pub eval_every: Option<usize>,
}

pub fn train_config(file: &FileSettings, flags: TrainFlags) -> CliResult<TrainConfig> {
    let d = TrainConfig::default();
    let config = TrainConfig {
        epochs: file.pick(flags.epochs, "epochs", d.epochs)?,
        dropout_rate: file.pick(flags.dropout, "dropout", d.dropout_rate)?,
        train_fraction: file.pick(flags.train_fraction, "train-fraction", d.train_fraction)?,
        lr: file.pick(flags.lr, "lr", d.lr)?,
        batch_size: file.pick(flags.batch_size, "batch-size", d.batch_size)?,
        seed: file.pick(flags.seed, "seed", d.seed)?,
        eval_every: file.pick(flags.eval_every, "eval-every", d.eval_every)?,
    };
    config.validate()?;
    Ok(config)
}

pub struct SteerFlags {
    pub lambda: Option<f64>,
    pub lr: Option<f64>,
    pub max_steps: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

pub fn steering_config(file: &FileSettings, flags: SteerFlags) -> CliResult<SteeringConfig> {
    let d = SteeringConfig::default();
    let config = SteeringConfig {
        lambda: file.pick(flags.lambda, "lambda", d.lambda)?,
        lr: file.pick(flags.lr, "steer-lr", d.lr)?,
        max_steps: file.pick(flags.max_steps, "max-steps", d.max_steps)?,
        grad_tolerance: file.pick(flags.tol, "tol", d.grad_tolerance)?,
        seed: file.pick(flags.seed, "seed", d.seed)?,
    };
    config.validate()?;
    Ok(config)
}
