use rand::seq::SliceRandom;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AffectModel, ChannelEnsemble, ModelKind};
use crate::dataio::{split_indices, Dataset, GridDataset, Scaler};
use crate::error::{check_dim, Error, Result};
use crate::evalreport::{evaluate, EvalReport};
use crate::grid::{CHANNEL_DIM, GRID_CHANNELS};
use crate::nn::{adam_step, mse_loss, AdamConfig, AdamState, Mlp, MlpGrads};
use crate::rng::{stream_rng, stream_seed, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub dropout_rate: f64,
    pub train_fraction: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Evaluate the test split every this many epochs; 0 disables checkpoints.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1500,
            dropout_rate: 0.2,
            train_fraction: 0.7,
            lr: 1e-3,
            batch_size: 256,
            seed: 0,
            eval_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!(
                "dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub test_mae: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub kind: ModelKind,
    pub train_size: usize,
    pub test_size: usize,
    pub rows: Vec<EpochRow>,
    pub test: EvalReport,
}

impl TrainingReport {
    pub fn final_train_loss(&self) -> Option<f64> {
        self.rows.last().map(|r| r.train_loss)
    }

    /// `epoch  train_loss  test_mae` table.
    pub fn render(&self) -> String {
        let mut out = format!("{:>6}  {:>12}  {:>10}\n", "epoch", "train_loss", "test_mae");
        for r in &self.rows {
            let mae = r.test_mae.map(|m| format!("{m:.6}")).unwrap_or_default();
            out.push_str(&format!(
                "{:>6}  {:>12.8}  {:>10}\n",
                r.epoch, r.train_loss, mae
            ));
        }
        out
    }
}

/// Trains one affect network.
///
/// The dataset is split with `config.seed`; embedding and target scalers are
/// fitted on the training part only and stored in the returned model. The
/// objective is MSE on `[0,1]`-scaled targets, minibatched Adam with inverted
/// dropout after each hidden layer. The report carries per-epoch training
/// loss and the metrics of the held-out split.
pub fn train_affect_model(
    dataset: &Dataset,
    kind: ModelKind,
    config: &TrainConfig,
) -> Result<(AffectModel, TrainingReport)> {
    config.validate()?;
    let dim = dataset.input_dim().ok_or(Error::Empty("dataset"))?;
    check_dim("dataset input", kind.input_dim(), dim)?;
    let (train_idx, test_idx) = split_indices(dataset.len(), config.train_fraction, config.seed)?;
    if train_idx.is_empty() {
        return Err(Error::Empty("train split"));
    }
    if test_idx.is_empty() {
        return Err(Error::Empty("test split"));
    }
    let train = dataset.subset(&train_idx);
    let test = dataset.subset(&test_idx);

    let embedding_scaler = Scaler::fit(train.samples.iter().map(|s| &s.input[..]))?;
    let target_scaler = Scaler::fit(train.samples.iter().map(|s| &s.mean[..]))?;
    let inputs = train
        .samples
        .iter()
        .map(|s| embedding_scaler.apply(&s.input))
        .collect::<Result<Vec<_>>>()?;
    let targets = train
        .samples
        .iter()
        .map(|s| target_scaler.apply(&s.mean))
        .collect::<Result<Vec<_>>>()?;

    let channel = kind.stream_channel();
    let mlp = Mlp::init(
        &Mlp::affect_dims(dim),
        stream_seed(config.seed, Stream::Init { channel }),
    )?;
    let mut model = AffectModel::new(mlp, embedding_scaler, target_scaler, kind)?;
    let mut adam = AdamState::for_mlp(model.mlp(), AdamConfig::with_lr(config.lr));
    let mut grads = MlpGrads::zeros_like(model.mlp());
    let mut dropout_rng = stream_rng(config.seed, Stream::Dropout { channel });
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut rows = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.sort_unstable();
        order.shuffle(&mut stream_rng(
            config.seed,
            Stream::Shuffle {
                channel,
                epoch: epoch as u32,
            },
        ));
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.fill_zero();
            let mlp = model.mlp_mut();
            for &i in batch {
                let cache = mlp.forward_cached(
                    &inputs[i],
                    Some((config.dropout_rate, &mut dropout_rng as &mut dyn RngCore)),
                )?;
                let (loss, g) = mse_loss(cache.output(), &targets[i])?;
                total += loss;
                mlp.backward_into(&cache, &g, &mut grads, false)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(mlp, &grads, &mut adam)?;
        }
        let train_loss = total / inputs.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::NanLoss { epoch });
        }
        let test_mae = if config.eval_every > 0 && epoch % config.eval_every == 0 {
            Some(evaluate(&model, &test)?.mae)
        } else {
            None
        };
        rows.push(EpochRow {
            epoch,
            train_loss,
            test_mae,
        });
    }
    let params_finite = model
        .mlp()
        .layers()
        .iter()
        .all(|l| l.weights().iter().chain(l.bias()).all(|w| w.is_finite()));
    if !params_finite {
        return Err(Error::NanLoss {
            epoch: config.epochs,
        });
    }

    let report = TrainingReport {
        kind,
        train_size: train.len(),
        test_size: test.len(),
        rows,
        test: evaluate(&model, &test)?,
    };
    Ok((model, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub channel: usize,
    pub final_train_loss: Option<f64>,
    pub test_mae: f64,
    pub within_sd_fraction: f64,
}

/// Per-channel test metrics of an ensemble. The spread is the standard
/// deviation across channels; both population and sample forms are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub channels: Vec<ChannelSummary>,
    pub train_size: usize,
    pub test_size: usize,
    pub mae_mean: f64,
    pub mae_std: f64,
    pub mae_std_sample: f64,
    pub within_sd_fraction: f64,
}

impl EnsembleReport {
    pub fn from_summaries(
        channels: Vec<ChannelSummary>,
        train_size: usize,
        test_size: usize,
    ) -> Self {
        let n = channels.len() as f64;
        let mean = channels.iter().map(|c| c.test_mae).sum::<f64>() / n;
        let ss = channels
            .iter()
            .map(|c| (c.test_mae - mean).powi(2))
            .sum::<f64>();
        let within = channels.iter().map(|c| c.within_sd_fraction).sum::<f64>() / n;
        Self {
            channels,
            train_size,
            test_size,
            mae_mean: mean,
            mae_std: (ss / n).sqrt(),
            mae_std_sample: if n > 1.0 {
                (ss / (n - 1.0)).sqrt()
            } else {
                0.0
            },
            within_sd_fraction: within,
        }
    }
}

/// Trains the 77 channel networks independently (in parallel). Every
/// channel uses the same split, so all members are scored on the same
/// held-out words.
pub fn train_channel_ensemble(
    grids: &GridDataset<'_>,
    config: &TrainConfig,
) -> Result<(ChannelEnsemble, EnsembleReport)> {
    check_dim("grid channels", GRID_CHANNELS, grids.channels())?;
    check_dim("grid channel width", CHANNEL_DIM, grids.channel_dim())?;
    if grids.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let trained = (0..GRID_CHANNELS)
        .into_par_iter()
        .map(|c| {
            let ds = grids.channel(c)?;
            train_affect_model(&ds, ModelKind::Channel(c), config).map_err(|e| e.in_channel(c))
        })
        .collect::<Result<Vec<_>>>()?;
    let (train_size, test_size) = (trained[0].1.train_size, trained[0].1.test_size);
    let summaries = trained
        .iter()
        .enumerate()
        .map(|(c, (_, r))| ChannelSummary {
            channel: c,
            final_train_loss: r.final_train_loss(),
            test_mae: r.test.mae,
            within_sd_fraction: r.test.within_sd_fraction,
        })
        .collect();
    let ensemble = ChannelEnsemble::new(trained.into_iter().map(|(m, _)| m).collect())?;
    Ok((
        ensemble,
        EnsembleReport::from_summaries(summaries, train_size, test_size),
    ))
}
