//! `AFM1` model files: same preamble as the embedding container, a JSON
//! header describing every member network, then the weights.
//!
//! The payload holds, for each model in header order and each layer in
//! order, the row-major `out x in` weight block followed by the bias, as
//! little-endian `f32`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::container::{DTYPE_F32LE, FORMAT_VERSION};
use super::{
    decode_f32s, encode_f32s, read_file, read_preamble, write_file, write_preamble, Scaler,
};
use crate::error::{Error, Result};
use crate::grid::GRID_CHANNELS;
use crate::nn::{DenseLayer, Mlp};
use crate::predictor::{AffectModel, ChannelEnsemble, ModelKind, TrainConfig};

pub const MODEL_MAGIC: &[u8; 4] = b"AFM1";

/// Provenance stored alongside the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    #[serde(flatten)]
    pub config: TrainConfig,
    /// Final training loss (mean over channels for an ensemble).
    pub loss: Option<f64>,
    pub test_mae: Option<f64>,
}

impl TrainingMeta {
    pub fn untrained() -> Self {
        Self {
            config: TrainConfig {
                epochs: 0,
                ..TrainConfig::default()
            },
            loss: None,
            test_mae: None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelEntry {
    kind: ModelKind,
    layer_dims: Vec<usize>,
    embedding_scaler: Scaler,
    target_scaler: Scaler,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    version: u32,
    dtype: String,
    channels: usize,
    models: Vec<ModelEntry>,
    training: TrainingMeta,
}

/// Everything a model file holds: one joint model or a 77-member ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub models: Vec<AffectModel>,
    pub training: TrainingMeta,
}

impl ModelFile {
    pub fn is_ensemble(&self) -> bool {
        self.models.len() == GRID_CHANNELS
    }

    pub fn into_single(self) -> Result<AffectModel> {
        if self.models.len() != 1 {
            return Err(Error::Header(format!(
                "expected a single-model file, found {} channels",
                self.models.len()
            )));
        }
        Ok(self.models.into_iter().next().expect("one model"))
    }

    pub fn into_ensemble(self) -> Result<ChannelEnsemble> {
        if !self.is_ensemble() {
            return Err(Error::Header(format!(
                "expected a {GRID_CHANNELS}-channel ensemble file, found {} channels",
                self.models.len()
            )));
        }
        ChannelEnsemble::new(self.models)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let channels = self.models.len();
        if channels != 1 && channels != GRID_CHANNELS {
            return Err(Error::Header(format!(
                "channel count must be 1 or {GRID_CHANNELS}, got {channels}"
            )));
        }
        let header = ModelHeader {
            version: FORMAT_VERSION,
            dtype: DTYPE_F32LE.to_string(),
            channels,
            models: self
                .models
                .iter()
                .map(|m| ModelEntry {
                    kind: m.kind(),
                    layer_dims: m.mlp().dims(),
                    embedding_scaler: m.embedding_scaler().clone(),
                    target_scaler: m.target_scaler().clone(),
                })
                .collect(),
            training: self.training.clone(),
        };
        let header = serde_json::to_vec(&header)?;
        let params: usize = self.models.iter().map(|m| m.mlp().param_count()).sum();
        let mut out = Vec::with_capacity(12 + header.len() + 4 * params);
        write_preamble(&mut out, MODEL_MAGIC, &header);
        for m in &self.models {
            for layer in m.mlp().layers() {
                encode_f32s(&mut out, layer.weights());
                encode_f32s(&mut out, layer.bias());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, payload_start) = read_preamble(bytes, MODEL_MAGIC)?;
        let header: ModelHeader = serde_json::from_slice(header)?;
        if header.version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: header.version,
                supported: FORMAT_VERSION,
            });
        }
        if header.dtype != DTYPE_F32LE {
            return Err(Error::UnsupportedDtype(header.dtype));
        }
        if header.channels != header.models.len() {
            return Err(Error::Header(format!(
                "channel count {} disagrees with {} model entries",
                header.channels,
                header.models.len()
            )));
        }
        if header.channels != 1 && header.channels != GRID_CHANNELS {
            return Err(Error::Header(format!(
                "channel count must be 1 or {GRID_CHANNELS}, got {}",
                header.channels
            )));
        }
        let mut total = 0usize;
        for m in &header.models {
            if m.layer_dims.len() < 2 || m.layer_dims.contains(&0) {
                return Err(Error::Header(format!("bad layer dims {:?}", m.layer_dims)));
            }
            for w in m.layer_dims.windows(2) {
                total = w[0]
                    .checked_mul(w[1])
                    .and_then(|p| p.checked_add(w[1]))
                    .and_then(|p| p.checked_add(total))
                    .ok_or_else(|| Error::Header("layer dims overflow".into()))?;
            }
        }
        let floats = decode_f32s(&bytes[payload_start..], total, payload_start)?;
        let mut cursor = 0;
        let mut take = |n: usize| {
            let s = floats[cursor..cursor + n].to_vec();
            cursor += n;
            s
        };
        let mut models = Vec::with_capacity(header.models.len());
        for entry in header.models {
            let layers = entry
                .layer_dims
                .windows(2)
                .map(|w| {
                    let weights = take(w[0] * w[1]);
                    let bias = take(w[1]);
                    DenseLayer::new(w[0], w[1], weights, bias)
                })
                .collect::<Result<Vec<_>>>()?;
            models.push(AffectModel::new(
                Mlp::new(layers)?,
                entry.embedding_scaler,
                entry.target_scaler,
                entry.kind,
            )?);
        }
        Ok(Self {
            models,
            training: header.training,
        })
    }
}

pub fn save_model_file(path: &Path, file: &ModelFile) -> Result<()> {
    write_file(path, &file.to_bytes()?)
}

pub fn load_model_file(path: &Path) -> Result<ModelFile> {
    ModelFile::from_bytes(&read_file(path)?)
}

pub fn save_model(path: &Path, model: &AffectModel, training: &TrainingMeta) -> Result<()> {
    save_model_file(
        path,
        &ModelFile {
            models: vec![model.clone()],
            training: training.clone(),
        },
    )
}

pub fn load_model(path: &Path) -> Result<AffectModel> {
    load_model_file(path)?.into_single()
}

pub fn save_ensemble(
    path: &Path,
    ensemble: &ChannelEnsemble,
    training: &TrainingMeta,
) -> Result<()> {
    save_model_file(
        path,
        &ModelFile {
            models: ensemble.models().to_vec(),
            training: training.clone(),
        },
    )
}

pub fn load_ensemble(path: &Path) -> Result<ChannelEnsemble> {
    load_model_file(path)?.into_ensemble()
}
