use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::nn::Real;

/// Per-coordinate min-max scaler onto `[0, 1]`.
///
/// Coordinates whose training range is empty (`max == min`) map to `0.5`
/// and invert back to `min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl Scaler {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        check_dim("scaler bounds", min.len(), max.len())?;
        if min.is_empty() {
            return Err(Error::Empty("scaler bounds"));
        }
        if !min.iter().chain(&max).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("scaler bounds"));
        }
        if let Some(i) = (0..min.len()).find(|&i| max[i] < min[i]) {
            return Err(Error::InvalidConfig(format!(
                "scaler coordinate {i}: max {} < min {}",
                max[i], min[i]
            )));
        }
        Ok(Self { min, max })
    }

    /// Identity map on `[0,1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self {
            min: vec![0.0; dim],
            max: vec![1.0; dim],
        }
    }

    /// Exact componentwise extrema of `rows`.
    pub fn fit<'a, P, I>(rows: I) -> Result<Self>
    where
        P: Real + 'a,
        I: IntoIterator<Item = &'a [P]>,
    {
        let mut rows = rows.into_iter();
        let first = rows.next().ok_or(Error::Empty("scaler fit"))?;
        let mut min: Vec<f64> = first.iter().map(|x| x.to_f64()).collect();
        let mut max = min.clone();
        for row in rows {
            check_dim("scaler fit", min.len(), row.len())?;
            for ((lo, hi), x) in min.iter_mut().zip(max.iter_mut()).zip(row) {
                let x = x.to_f64();
                if x < *lo {
                    *lo = x;
                }
                if x > *hi {
                    *hi = x;
                }
            }
        }
        Self::new(min, max)
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }

    /// `(v - min) / (max - min)` per coordinate.
    pub fn apply<P: Real>(&self, v: &[P]) -> Result<Vec<f64>> {
        check_dim("scaler input", self.dim(), v.len())?;
        Ok(v.iter()
            .enumerate()
            .map(|(i, x)| {
                let range = self.max[i] - self.min[i];
                if range > 0.0 {
                    (x.to_f64() - self.min[i]) / range
                } else {
                    0.5
                }
            })
            .collect())
    }

    pub fn invert(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim("scaler input", self.dim(), v.len())?;
        Ok(v.iter()
            .enumerate()
            .map(|(i, x)| {
                let range = self.max[i] - self.min[i];
                if range > 0.0 {
                    self.min[i] + x * range
                } else {
                    self.min[i]
                }
            })
            .collect())
    }

    /// `d apply(v)_i / d v_i`; zero on degenerate coordinates.
    pub fn derivative(&self) -> Vec<f64> {
        self.min
            .iter()
            .zip(&self.max)
            .map(|(lo, hi)| if hi > lo { 1.0 / (hi - lo) } else { 0.0 })
            .collect()
    }

    /// Rescales a length such as a standard deviation: divides by the range
    /// without shifting. Degenerate coordinates are left unscaled.
    pub fn scale_length(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim("scaler input", self.dim(), v.len())?;
        Ok(v.iter()
            .enumerate()
            .map(|(i, x)| {
                let range = self.max[i] - self.min[i];
                if range > 0.0 {
                    x / range
                } else {
                    *x
                }
            })
            .collect())
    }
}
