use crate::error::{check_dim, Error, Result};

/// Mean squared error and its gradient with respect to `pred`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_dim("mse target", pred.len(), target.len())?;
    if pred.is_empty() {
        return Err(Error::Empty("mse inputs"));
    }
    let n = pred.len() as f64;
    let diff: Vec<f64> = pred.iter().zip(target).map(|(p, t)| p - t).collect();
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    let grad = diff.into_iter().map(|d| 2.0 * d / n).collect();
    Ok((loss, grad))
}
