use crate::dataio::EmbeddingContainer;
use crate::error::{check_dim, Error, Result};

/// Token positions in a prompt-encoder output.
pub const GRID_CHANNELS: usize = 77;
/// Width of one prompt-encoder channel.
pub const CHANNEL_DIM: usize = 768;

/// A `77 x 768` prompt-conditioning grid, row-major by channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingGrid {
    values: Vec<f64>,
    pub prompt: String,
}

impl EmbeddingGrid {
    pub fn new(prompt: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        check_dim("embedding grid", GRID_CHANNELS * CHANNEL_DIM, values.len())?;
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("embedding grid"));
        }
        Ok(Self {
            values,
            prompt: prompt.into(),
        })
    }

    pub fn zeros(prompt: impl Into<String>) -> Self {
        Self {
            values: vec![0.0; GRID_CHANNELS * CHANNEL_DIM],
            prompt: prompt.into(),
        }
    }

    pub fn from_f32(prompt: impl Into<String>, values: &[f32]) -> Result<Self> {
        Self::new(prompt, values.iter().map(|v| *v as f64).collect())
    }

    /// Row `key` of a `(n, 77, 768)` container.
    pub fn from_container(container: &EmbeddingContainer, key: &str) -> Result<Self> {
        let shape = container.shape();
        if shape.len() != 3 || shape[1] != GRID_CHANNELS || shape[2] != CHANNEL_DIM {
            return Err(Error::Header(format!(
                "expected a (count, {GRID_CHANNELS}, {CHANNEL_DIM}) container, got shape {shape:?}"
            )));
        }
        Self::from_f32(key, container.get(key)?)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.values[c * CHANNEL_DIM..(c + 1) * CHANNEL_DIM]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.values[c * CHANNEL_DIM..(c + 1) * CHANNEL_DIM]
    }

    pub fn channels(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(CHANNEL_DIM)
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.values.iter().map(|v| *v as f32).collect()
    }

    /// Largest absolute coordinate difference.
    pub fn max_abs_diff(&self, other: &EmbeddingGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &EmbeddingGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}
