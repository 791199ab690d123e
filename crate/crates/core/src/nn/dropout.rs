use rand::{Rng, RngCore};

use crate::error::{Error, Result};

/// Inverted dropout: kept units are scaled by `1 / (1 - rate)` during
/// training so inference needs no correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutSpec {
    pub rate: f64,
    pub seed: u64,
}

impl DropoutSpec {
    pub const DEFAULT_RATE: f64 = 0.2;

    pub fn new(rate: f64, seed: u64) -> Result<Self> {
        let spec = Self { rate, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if (0.0..1.0).contains(&self.rate) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "dropout rate must be in [0, 1), got {}",
                self.rate
            )))
        }
    }
}

/// Multipliers for one layer: `0` for dropped units, `1/(1-rate)` for kept ones.
pub fn dropout_mask(len: usize, rate: f64, rng: &mut dyn RngCore) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

pub fn apply_dropout(values: &mut [f64], rate: f64, rng: &mut dyn RngCore) {
    let mask = dropout_mask(values.len(), rate, rng);
    values.iter_mut().zip(mask).for_each(|(v, m)| *v *= m);
}
