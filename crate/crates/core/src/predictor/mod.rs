//! Affect predictors: a single network over the joint image/text space and
//! an ensemble of per-channel networks over prompt-encoder grids.

mod train;

pub use train::{
    train_affect_model, train_channel_ensemble, ChannelSummary, EnsembleReport, EpochRow,
    TrainConfig, TrainingReport,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affect::AffectVector;
use crate::dataio::Scaler;
use crate::error::{check_dim, Error, Result};
use crate::grid::{EmbeddingGrid, CHANNEL_DIM, GRID_CHANNELS};
use crate::nn::{Mlp, Real};

/// Width of the joint image/text embedding space.
pub const JOINT_DIM: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Joint,
    Channel(usize),
}

impl ModelKind {
    pub fn input_dim(self) -> usize {
        match self {
            ModelKind::Joint => JOINT_DIM,
            ModelKind::Channel(_) => CHANNEL_DIM,
        }
    }

    pub(crate) fn stream_channel(self) -> u32 {
        match self {
            ModelKind::Joint => 0,
            ModelKind::Channel(c) => c as u32 + 1,
        }
    }
}

/// A trained network together with the scalers fitted on its training
/// split. Inputs are raw embeddings; outputs live on the `[0,1]` affect scale.
#[derive(Debug, Clone, PartialEq)]
pub struct AffectModel {
    mlp: Mlp,
    embedding_scaler: Scaler,
    target_scaler: Scaler,
    kind: ModelKind,
}

impl AffectModel {
    pub fn new(
        mlp: Mlp,
        embedding_scaler: Scaler,
        target_scaler: Scaler,
        kind: ModelKind,
    ) -> Result<Self> {
        check_dim("model input width", kind.input_dim(), mlp.input_dim())?;
        check_dim("model output width", 3, mlp.output_dim())?;
        check_dim("embedding scaler", mlp.input_dim(), embedding_scaler.dim())?;
        check_dim("target scaler", 3, target_scaler.dim())?;
        if let ModelKind::Channel(c) = kind {
            if c >= GRID_CHANNELS {
                return Err(Error::InvalidConfig(format!(
                    "channel index {c} >= {GRID_CHANNELS}"
                )));
            }
        }
        Ok(Self {
            mlp,
            embedding_scaler,
            target_scaler,
            kind,
        })
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub(crate) fn mlp_mut(&mut self) -> &mut Mlp {
        &mut self.mlp
    }

    pub fn embedding_scaler(&self) -> &Scaler {
        &self.embedding_scaler
    }

    pub fn target_scaler(&self) -> &Scaler {
        &self.target_scaler
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.mlp.input_dim()
    }

    /// Unclamped network output for a raw embedding.
    pub fn predict_raw<P: Real>(&self, embedding: &[P]) -> Result<AffectVector> {
        let x = self.embedding_scaler.apply(embedding)?;
        let y = self.mlp.forward(&x, None)?;
        Ok(AffectVector([y[0], y[1], y[2]]))
    }

    /// Affect score of a raw embedding, clamped to `[0,1]^3`.
    pub fn score<P: Real>(&self, embedding: &[P]) -> Result<AffectVector> {
        Ok(self.predict_raw(embedding)?.clamp_unit())
    }

    /// Survey-scale means and standard deviations mapped onto the model's
    /// `[0,1]` target scale.
    pub fn scale_targets(&self, mean: &[f64; 3], sd: &[f64; 3]) -> Result<([f64; 3], [f64; 3])> {
        let m = self.target_scaler.apply(mean)?;
        let s = self.target_scaler.scale_length(sd)?;
        Ok(([m[0], m[1], m[2]], [s[0], s[1], s[2]]))
    }
}

pub fn score<P: Real>(model: &AffectModel, embedding: &[P]) -> Result<AffectVector> {
    model.score(embedding)
}

/// 77 channel models, member `c` reading channel `c` of a prompt grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEnsemble {
    models: Vec<AffectModel>,
}

impl ChannelEnsemble {
    pub fn new(models: Vec<AffectModel>) -> Result<Self> {
        check_dim("ensemble members", GRID_CHANNELS, models.len())?;
        for (c, m) in models.iter().enumerate() {
            if m.kind != ModelKind::Channel(c) {
                return Err(Error::InvalidConfig(format!(
                    "ensemble member {c} has kind {:?}",
                    m.kind
                )));
            }
        }
        Ok(Self { models })
    }

    pub fn models(&self) -> &[AffectModel] {
        &self.models
    }

    pub fn model(&self, c: usize) -> &AffectModel {
        &self.models[c]
    }

    pub fn into_models(self) -> Vec<AffectModel> {
        self.models
    }

    /// Clamped score of every channel, in channel order.
    pub fn score_grid(&self, grid: &EmbeddingGrid) -> Result<Vec<AffectVector>> {
        self.models
            .par_iter()
            .zip(grid.values().par_chunks_exact(CHANNEL_DIM))
            .map(|(m, z)| m.score(z))
            .collect()
    }

    /// Channel-mean of [`Self::score_grid`]. The mean is a reporting
    /// convention, not a trained quantity.
    pub fn score_grid_mean(&self, grid: &EmbeddingGrid) -> Result<AffectVector> {
        let scores = self.score_grid(grid)?;
        Ok(AffectVector::mean(&scores).expect("ensemble is non-empty"))
    }
}

pub fn score_grid(ensemble: &ChannelEnsemble, grid: &EmbeddingGrid) -> Result<Vec<AffectVector>> {
    ensemble.score_grid(grid)
}
