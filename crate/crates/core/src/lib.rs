//! Affect prediction from semantic embeddings and affect-conditioned
//! embedding steering.
//!
//! * [`nn`]: the ReLU perceptron, its backward pass, Adam and dropout.
//! * [`dataio`]: VAD lexicon parsing, scalers, dataset splits, and the
//!   `AEC1` embedding container / `AFM1` model file formats.
//! * [`predictor`]: training and applying the joint-space model and the
//!   77-channel prompt-grid ensemble.
//! * [`steering`]: the affect penalty with its gradient, semantic losses,
//!   and the prompt-grid optimizer.
//! * [`evalreport`]: test metrics and score tables.

pub mod affect;
pub mod dataio;
pub mod error;
pub mod evalreport;
pub mod grid;
pub mod nn;
pub mod predictor;
pub mod rng;
pub mod steering;

pub use affect::{AffectDim, AffectVector, Direction};
pub use error::{Error, Result};
pub use grid::{EmbeddingGrid, CHANNEL_DIM, GRID_CHANNELS};
pub use predictor::{AffectModel, ChannelEnsemble, ModelKind, TrainConfig, JOINT_DIM};
pub use steering::{AffectTarget, SteeringConfig};
