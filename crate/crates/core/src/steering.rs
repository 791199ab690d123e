//! Affect conditioning of embeddings.
//!
//! Two entry points:
//!
//! * [`affect_penalty`] is the loss term `lambda * |A(e) - v0|^2` together
//!   with its gradient with respect to the image embedding `e`, for
//!   generation-by-optimization loops that own the generator and the
//!   semantic loss ([`spherical_distance`] or [`cosine_similarity`]).
//! * [`steer_embedding`] minimizes
//!   `sum_c |b_c - z_c|^2 + lambda * |A_c(z_c) - v0|^2` over a prompt grid
//!   `z`, starting from the anchor grid `b`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affect::{AffectDim, AffectVector, Direction};
use crate::dataio::{read_container, write_container, EmbeddingContainer};
use crate::error::{check_dim, Error, Result};
use crate::grid::{EmbeddingGrid, CHANNEL_DIM, GRID_CHANNELS};
use crate::nn::{AdamConfig, AdamState};
use crate::predictor::{AffectModel, ChannelEnsemble};

/// Most consecutive step halvings tried before a channel is declared stalled.
const MAX_HALVINGS: u32 = 40;

/// Desired affect `v0`, optionally remembering which axis it pushes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffectTarget {
    pub v0: AffectVector,
    pub axis: Option<(AffectDim, Direction)>,
}

impl AffectTarget {
    pub fn new(v0: AffectVector) -> Result<Self> {
        if !v0.is_unit() {
            return Err(Error::InvalidConfig(format!(
                "target {:?} outside [0,1]^3",
                v0.0
            )));
        }
        Ok(Self { v0, axis: None })
    }

    /// `"<dim><high|low>"`, e.g. `Alow`, or the raw vector for custom targets.
    pub fn label(&self) -> String {
        match self.axis {
            Some((d, dir)) => format!("{d}{dir}"),
            None => format!(
                "v0=({:?},{:?},{:?})",
                self.v0.0[0], self.v0.0[1], self.v0.0[2]
            ),
        }
    }
}

/// 1 (high) or 0 (low) on the chosen axis, 0.5 on the other two.
pub fn build_target(dim: AffectDim, direction: Direction) -> AffectTarget {
    let mut v = [0.5; 3];
    v[dim.index()] = match direction {
        Direction::High => 1.0,
        Direction::Low => 0.0,
    };
    AffectTarget {
        v0: AffectVector(v),
        axis: Some((dim, direction)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringConfig {
    pub lambda: f64,
    pub max_steps: usize,
    pub lr: f64,
    pub grad_tolerance: f64,
    /// Recorded with the output. The optimizer itself is deterministic.
    pub seed: u64,
}

impl Default for SteeringConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            max_steps: 500,
            lr: 0.05,
            grad_tolerance: 1e-5,
            seed: 0,
        }
    }
}

impl SteeringConfig {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lr must be positive, got {}",
                self.lr
            )));
        }
        if self.grad_tolerance.is_nan() || self.grad_tolerance < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "grad_tolerance must be non-negative, got {}",
                self.grad_tolerance
            )));
        }
        Ok(())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "lambda must be positive, got {lambda}"
        )))
    }
}

/// `lambda * |A(e) - v0|^2` and its exact gradient with respect to the raw
/// embedding `e` (through the model's embedding scaler).
pub fn affect_penalty(
    model: &AffectModel,
    embedding: &[f64],
    target: &AffectTarget,
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    check_lambda(lambda)?;
    penalty_unchecked(model, embedding, &target.v0, lambda)
}

fn penalty_unchecked(
    model: &AffectModel,
    e: &[f64],
    v0: &AffectVector,
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    check_dim("penalty embedding", model.input_dim(), e.len())?;
    let x = model.embedding_scaler().apply(e)?;
    let cache = model.mlp().forward_cached(&x, None)?;
    let out = cache.output();
    let r: Vec<f64> = (0..3).map(|d| out[d] - v0.0[d]).collect();
    let loss = lambda * r.iter().map(|v| v * v).sum::<f64>();
    let upstream: Vec<f64> = r.iter().map(|v| 2.0 * lambda * v).collect();
    let gx = model.mlp().input_gradient_cached(&cache, &upstream)?;
    let grad = gx
        .iter()
        .zip(model.embedding_scaler().derivative())
        .map(|(g, s)| g * s)
        .collect();
    Ok((loss, grad))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit(v: &[f64], what: &'static str) -> Result<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroVector(what));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Great-circle style distance `2 * asin(|u_hat - v_hat| / 2)^2` between the
/// directions of `u` and `v`.
pub fn spherical_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    check_dim("spherical_distance", u.len(), v.len())?;
    let (u, v) = (
        unit(u, "spherical_distance")?,
        unit(v, "spherical_distance")?,
    );
    let chord = u
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let half = (chord / 2.0).min(1.0);
    Ok(2.0 * half.asin().powi(2))
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    check_dim("cosine_similarity", u.len(), v.len())?;
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector("cosine_similarity"));
    }
    let dot = u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// One channel's term `|b_c - z_c|^2 + lambda * |A_c(z_c) - v0|^2` and its
/// gradient with respect to `z_c`.
pub fn channel_objective(
    model: &AffectModel,
    z: &[f64],
    anchor: &[f64],
    v0: &AffectVector,
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    check_dim("channel anchor", z.len(), anchor.len())?;
    let (penalty, mut grad) = penalty_unchecked(model, z, v0, lambda)?;
    let mut dist = 0.0;
    for ((g, zi), bi) in grad.iter_mut().zip(z).zip(anchor) {
        let d = zi - bi;
        dist += d * d;
        *g += 2.0 * d;
    }
    Ok((dist + penalty, grad))
}

/// The full grid objective and its `77 x 768` gradient (flattened, channel
/// major). Channels are evaluated in parallel; the total is summed in
/// channel order.
pub fn eval_sd_objective(
    ensemble: &ChannelEnsemble,
    z: &EmbeddingGrid,
    anchor: &EmbeddingGrid,
    target: &AffectTarget,
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    check_lambda(lambda)?;
    let parts = ensemble
        .models()
        .par_iter()
        .enumerate()
        .map(|(c, m)| channel_objective(m, z.channel(c), anchor.channel(c), &target.v0, lambda))
        .collect::<Result<Vec<_>>>()?;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(GRID_CHANNELS * CHANNEL_DIM);
    for (l, g) in parts {
        loss += l;
        grad.extend(g);
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxSteps,
    GradTolerance,
    /// No step size down to `lr * 2^-40` decreased the loss.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSteer {
    pub z: Vec<f64>,
    /// Loss before the first step and after every accepted step.
    pub trace: Vec<f64>,
    pub stop: StopReason,
    /// Step size of the last accepted step.
    pub final_lr: f64,
}

/// Adam on one channel from `z = anchor`. A step that would raise the loss
/// is retried at half the step size, so the trace never increases. Each step
/// starts from twice the last accepted step size (capped at `config.lr`).
/// When the Adam direction stops being a descent direction the moments are
/// restarted.
pub fn steer_channel(
    model: &AffectModel,
    anchor: &[f64],
    target: &AffectTarget,
    config: &SteeringConfig,
    channel: usize,
) -> Result<ChannelSteer> {
    config.validate()?;
    let objective = |z: &[f64]| channel_objective(model, z, anchor, &target.v0, config.lambda);
    let mut z = anchor.to_vec();
    let (mut loss, mut grad) = objective(&z)?;
    if !loss.is_finite() {
        return Err(Error::NanSteer { step: 0, channel });
    }
    let mut adam = AdamState::new(z.len(), AdamConfig::with_lr(config.lr));
    let mut final_lr = config.lr;
    let mut trace = Vec::with_capacity(config.max_steps + 1);
    trace.push(loss);
    let mut stop = StopReason::MaxSteps;

    'steps: for step in 1..=config.max_steps {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < config.grad_tolerance {
            stop = StopReason::GradTolerance;
            break;
        }
        adam.observe(&grad)?;
        let mut dir = adam.direction();
        if dot(&dir, &grad) <= 0.0 {
            // momentum points uphill; no step length along it can help
            adam.reset();
            adam.observe(&grad)?;
            dir = adam.direction();
        }
        let mut lr = (2.0 * final_lr).min(config.lr);
        let mut halvings = 0;
        loop {
            let cand: Vec<f64> = z.iter().zip(&dir).map(|(zi, d)| zi - lr * d).collect();
            let (c_loss, c_grad) = objective(&cand)?;
            if !c_loss.is_finite() || cand.iter().any(|v| !v.is_finite()) {
                return Err(Error::NanSteer { step, channel });
            }
            if c_loss <= loss {
                z = cand;
                loss = c_loss;
                grad = c_grad;
                final_lr = lr;
                break;
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                stop = StopReason::Stalled;
                break 'steps;
            }
            lr *= 0.5;
        }
        trace.push(loss);
    }
    Ok(ChannelSteer {
        z,
        trace,
        stop,
        final_lr,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteerResult {
    pub z_star: EmbeddingGrid,
    /// Total objective per step (channels that stopped early hold their
    /// final value).
    pub trace: Vec<f64>,
    pub channel_stops: Vec<StopReason>,
}

impl SteerResult {
    pub fn initial_loss(&self) -> f64 {
        self.trace[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.trace.last().expect("trace holds the initial loss")
    }
}

/// Minimizes the grid objective from `z = anchor`. The objective is a sum
/// of independent channel terms, so each channel runs its own
/// [`steer_channel`] (in parallel).
pub fn steer_embedding(
    ensemble: &ChannelEnsemble,
    anchor: &EmbeddingGrid,
    target: &AffectTarget,
    config: &SteeringConfig,
) -> Result<SteerResult> {
    config.validate()?;
    let per_channel = ensemble
        .models()
        .par_iter()
        .enumerate()
        .map(|(c, m)| steer_channel(m, anchor.channel(c), target, config, c))
        .collect::<Result<Vec<_>>>()?;
    let len = per_channel.iter().map(|c| c.trace.len()).max().unwrap_or(1);
    let mut trace = vec![0.0; len];
    for ch in &per_channel {
        let last = *ch.trace.last().expect("non-empty");
        for (k, t) in trace.iter_mut().enumerate() {
            *t += ch.trace.get(k).copied().unwrap_or(last);
        }
    }
    let mut values = Vec::with_capacity(GRID_CHANNELS * CHANNEL_DIM);
    let mut channel_stops = Vec::with_capacity(GRID_CHANNELS);
    for ch in per_channel {
        values.extend(ch.z);
        channel_stops.push(ch.stop);
    }
    Ok(SteerResult {
        z_star: EmbeddingGrid::new(anchor.prompt.clone(), values)?,
        trace,
        channel_stops,
    })
}

/// `"<prompt>|<dim><high|low>|lambda=<value>"`
pub fn steered_key(prompt: &str, target: &AffectTarget, lambda: f64) -> String {
    format!("{prompt}|{}|lambda={lambda:?}", target.label())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeredGrid {
    pub key: String,
    pub grid: EmbeddingGrid,
}

impl SteeredGrid {
    pub fn new(z_star: EmbeddingGrid, target: &AffectTarget, lambda: f64) -> Self {
        Self {
            key: steered_key(&z_star.prompt, target, lambda),
            grid: z_star,
        }
    }
}

/// Packs steered grids into a `(n, 77, 768)` container.
pub fn steered_container(grids: &[SteeredGrid]) -> Result<EmbeddingContainer> {
    let mut data = Vec::with_capacity(grids.len() * GRID_CHANNELS * CHANNEL_DIM);
    for g in grids {
        data.extend(g.grid.to_f32());
    }
    EmbeddingContainer::new(
        vec![grids.len(), GRID_CHANNELS, CHANNEL_DIM],
        grids.iter().map(|g| g.key.clone()).collect(),
        data,
    )
}

/// Writes steered grids to `path`. With `append`, rows are added to an
/// existing container at that path instead of replacing it.
pub fn export_steered(path: &Path, grids: &[SteeredGrid], append: bool) -> Result<()> {
    let mut container = steered_container(grids)?;
    if append && path.exists() {
        let mut existing = read_container(path)?;
        for (i, key) in container.keys().to_vec().into_iter().enumerate() {
            existing.push(key, container.row(i))?;
        }
        container = existing;
    }
    write_container(path, &container)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn targets() {
        assert_eq!(
            build_target(AffectDim::Valence, Direction::High).v0.0,
            [1.0, 0.5, 0.5]
        );
        assert_eq!(
            build_target(AffectDim::Dominance, Direction::Low).v0.0,
            [0.5, 0.5, 0.0]
        );
        let hi = build_target(AffectDim::Arousal, Direction::High).v0.0;
        let lo = build_target(AffectDim::Arousal, Direction::Low).v0.0;
        assert_eq!((hi[0], hi[2]), (lo[0], lo[2]));
        assert_ne!(hi[1], lo[1]);
        assert_eq!(
            build_target(AffectDim::Arousal, Direction::Low).label(),
            "Alow"
        );
        assert!(AffectTarget::new(AffectVector::new(1.2, 0.0, 0.0)).is_err());
    }

    #[test]
    fn spherical_distance_values() {
        assert_eq!(
            spherical_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            0.0
        );
        let anti = spherical_distance(&[1.0, 0.0], &[-3.0, 0.0]).unwrap();
        assert!((anti - PI * PI / 2.0).abs() < 1e-12);
        let orth = spherical_distance(&[2.0, 0.0, 0.0], &[0.0, 0.5, 0.0]).unwrap();
        let expected = 2.0 * (2f64.sqrt() / 2.0).asin().powi(2);
        assert!((orth - expected).abs() < 1e-12);
        assert!((orth - PI * PI / 8.0).abs() < 1e-12);
        assert!(matches!(
            spherical_distance(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroVector(_))
        ));
    }

    #[test]
    fn cosine_values() {
        assert!((cosine_similarity(&[0.3, -2.0], &[0.3, -2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 4.0]).unwrap(), 0.0);
        let c = cosine_similarity(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(cosine_similarity(&[0.0], &[1.0]).is_err());
        assert!(cosine_similarity(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn key_format() {
        let t = build_target(AffectDim::Arousal, Direction::Low);
        assert_eq!(
            steered_key("The sea at sunrise", &t, 1.0),
            "The sea at sunrise|Alow|lambda=1.0"
        );
        assert_eq!(steered_key("p", &t, 1e-12), "p|Alow|lambda=1e-12");
    }

    #[test]
    fn config_validation() {
        assert!(SteeringConfig::default().validate().is_ok());
        for bad in [
            SteeringConfig {
                lambda: 0.0,
                ..Default::default()
            },
            SteeringConfig {
                lambda: -1.0,
                ..Default::default()
            },
            SteeringConfig {
                max_steps: 0,
                ..Default::default()
            },
            SteeringConfig {
                lr: 0.0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
