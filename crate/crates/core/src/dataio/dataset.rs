use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::container::EmbeddingContainer;
use super::lexicon::LexiconEntry;
use crate::error::{check_dim, Error, Result};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Word,
    Image,
}

/// One annotated embedding, kept on its original scales. Scaling happens
/// with the scalers stored in the model, so the same dataset can be
/// evaluated against any trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub key: String,
    pub input: Vec<f32>,
    pub mean: [f64; 3],
    pub sd: [f64; 3],
    pub kind: SourceKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        if let Some(first) = samples.first() {
            let dim = first.input.len();
            for s in &samples {
                check_dim("dataset input", dim, s.input.len())?;
            }
        }
        Ok(Self { samples })
    }

    /// Joins lexicon entries with their embeddings (a `(n, dim)` container).
    /// Entries without an embedding are skipped and returned by word.
    pub fn from_entries(
        entries: &[LexiconEntry],
        embeddings: &EmbeddingContainer,
        kind: SourceKind,
    ) -> Result<(Self, Vec<String>)> {
        if embeddings.shape().len() != 2 {
            return Err(Error::Header(format!(
                "expected a (count, dim) container, got shape {:?}",
                embeddings.shape()
            )));
        }
        let index = embeddings.key_index();
        let mut samples = Vec::with_capacity(entries.len());
        let mut missing = Vec::new();
        for e in entries {
            match index.get(e.word.as_str()) {
                Some(&i) => samples.push(Sample {
                    key: e.word.clone(),
                    input: embeddings.row(i).to_vec(),
                    mean: e.mean,
                    sd: e.sd,
                    kind,
                }),
                None => missing.push(e.word.clone()),
            }
        }
        Ok((Self { samples }, missing))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.samples.first().map(|s| s.input.len())
    }

    pub fn extend(&mut self, other: Dataset) -> Result<()> {
        if let (Some(a), Some(b)) = (self.input_dim(), other.input_dim()) {
            check_dim("dataset input", a, b)?;
        }
        self.samples.extend(other.samples);
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    pub fn count(&self, kind: SourceKind) -> usize {
        self.samples.iter().filter(|s| s.kind == kind).count()
    }
}

/// Words annotated with prompt-encoder grids `(n, channels, dim)`; one
/// channel at a time is materialized as a plain [`Dataset`].
#[derive(Debug, Clone)]
pub struct GridDataset<'a> {
    grids: &'a EmbeddingContainer,
    rows: Vec<usize>,
    entries: Vec<LexiconEntry>,
}

impl<'a> GridDataset<'a> {
    pub fn from_entries(
        entries: &[LexiconEntry],
        grids: &'a EmbeddingContainer,
    ) -> Result<(Self, Vec<String>)> {
        if grids.shape().len() != 3 {
            return Err(Error::Header(format!(
                "expected a (count, channels, dim) container, got shape {:?}",
                grids.shape()
            )));
        }
        let index = grids.key_index();
        let mut rows = Vec::new();
        let mut kept = Vec::new();
        let mut missing = Vec::new();
        for e in entries {
            match index.get(e.word.as_str()) {
                Some(&i) => {
                    rows.push(i);
                    kept.push(e.clone());
                }
                None => missing.push(e.word.clone()),
            }
        }
        Ok((
            Self {
                grids,
                rows,
                entries: kept,
            },
            missing,
        ))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.grids.shape()[1]
    }

    pub fn channel_dim(&self) -> usize {
        self.grids.shape()[2]
    }

    pub fn channel(&self, c: usize) -> Result<Dataset> {
        if c >= self.channels() {
            return Err(Error::InvalidConfig(format!(
                "channel {c} out of range (container has {})",
                self.channels()
            )));
        }
        let dim = self.channel_dim();
        let samples = self
            .rows
            .iter()
            .zip(&self.entries)
            .map(|(&r, e)| Sample {
                key: e.word.clone(),
                input: self.grids.row(r)[c * dim..(c + 1) * dim].to_vec(),
                mean: e.mean,
                sd: e.sd,
                kind: SourceKind::Word,
            })
            .collect();
        Ok(Dataset { samples })
    }
}

/// Seeded permutation of `0..n` cut into a train prefix of
/// `round(n * train_fraction)` indices and the remainder.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, Stream::Split));
    let n_train = (n as f64 * train_fraction).round() as usize;
    let test = order.split_off(n_train.min(n));
    Ok((order, test))
}

pub fn split_dataset(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds.len(), train_fraction, seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}
