use super::mlp::{Mlp, MlpGrads};
use crate::error::{check_dim, Error, Result};

/// Scalar types Adam can update in place.
pub trait Real: Copy {
    fn to_f64(self) -> f64;
    fn from_f64(x: f64) -> Self;
}

impl Real for f32 {
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn from_f64(x: f64) -> Self {
        x as f32
    }
}

impl Real for f64 {
    fn to_f64(self) -> f64 {
        self
    }
    fn from_f64(x: f64) -> Self {
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && self.lr.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "invalid Adam settings {self:?}"
            )))
        }
    }
}

/// Adam with bias-corrected moments over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step_count: u64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        Self {
            config,
            step_count: 0,
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
        }
    }

    pub fn for_mlp(mlp: &Mlp, config: AdamConfig) -> Self {
        Self::new(mlp.param_count(), config)
    }

    /// Clears both moments and the step counter.
    pub fn reset(&mut self) {
        self.step_count = 0;
        self.first_moment.fill(0.0);
        self.second_moment.fill(0.0);
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn len(&self) -> usize {
        self.first_moment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_moment.is_empty()
    }

    /// Folds a gradient into the moment estimates and advances the step count.
    pub fn observe(&mut self, grads: &[f64]) -> Result<()> {
        check_dim("adam gradient", self.len(), grads.len())?;
        let AdamConfig { beta1, beta2, .. } = self.config;
        self.step_count += 1;
        for ((m, v), g) in self
            .first_moment
            .iter_mut()
            .zip(self.second_moment.iter_mut())
            .zip(grads)
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
        }
        Ok(())
    }

    /// Bias-corrected update direction `m_hat / (sqrt(v_hat) + eps)` for
    /// every coordinate. Multiply by the learning rate and subtract.
    pub fn direction(&self) -> Vec<f64> {
        let t = self.step_count.max(1) as i32;
        let c1 = 1.0 - self.config.beta1.powi(t);
        let c2 = 1.0 - self.config.beta2.powi(t);
        let eps = self.config.eps;
        self.first_moment
            .iter()
            .zip(&self.second_moment)
            .map(|(m, v)| (m / c1) / ((v / c2).sqrt() + eps))
            .collect()
    }

    /// One full Adam update of `params`.
    pub fn step<P: Real>(&mut self, params: &mut [P], grads: &[f64]) -> Result<()> {
        check_dim("adam parameters", self.len(), params.len())?;
        self.observe(grads)?;
        let lr = self.config.lr;
        for (p, d) in params.iter_mut().zip(self.direction()) {
            *p = P::from_f64(p.to_f64() - lr * d);
        }
        Ok(())
    }
}

/// Adam update of every weight and bias of `mlp`, in the layout of [`MlpGrads`].
pub fn adam_step(mlp: &mut Mlp, grads: &MlpGrads, state: &mut AdamState) -> Result<()> {
    check_dim("adam parameters", state.len(), mlp.param_count())?;
    state.observe(grads.as_slice())?;
    let lr = state.config.lr;
    let dir = state.direction();
    let mut offset = 0;
    for layer in mlp.layers_mut() {
        let (w, b) = layer.params_mut();
        for block in [w, b] {
            for (p, d) in block.iter_mut().zip(&dir[offset..]) {
                *p = (*p as f64 - lr * d) as f32;
            }
            offset += block.len();
        }
    }
    Ok(())
}
