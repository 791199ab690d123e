//! Dense numerics for the affect networks: a ReLU multilayer perceptron with
//! exact backward pass, Adam, inverted dropout and the MSE objective.
//!
//! Parameters are stored as `f32`; every product and reduction is carried out
//! in `f64`.

mod adam;
mod dropout;
mod loss;
mod mlp;

pub use adam::{adam_step, AdamConfig, AdamState, Real};
pub use dropout::{apply_dropout, dropout_mask, DropoutSpec};
pub use loss::mse_loss;
pub use mlp::{DenseLayer, ForwardCache, Mlp, MlpGrads, AFFECT_HIDDEN};

/// `sum_i w[i] * x[i]`, accumulated in four independent lanes.
#[inline]
pub(crate) fn dot(w: &[f32], x: &[f64]) -> f64 {
    debug_assert_eq!(w.len(), x.len());
    let mut acc = [0.0f64; 4];
    let wc = w.chunks_exact(4);
    let xc = x.chunks_exact(4);
    let (wr, xr) = (wc.remainder(), xc.remainder());
    for (a, b) in wc.zip(xc) {
        acc[0] += a[0] as f64 * b[0];
        acc[1] += a[1] as f64 * b[1];
        acc[2] += a[2] as f64 * b[2];
        acc[3] += a[3] as f64 * b[3];
    }
    let mut tail = 0.0;
    for (a, b) in wr.iter().zip(xr) {
        tail += *a as f64 * b;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * w`
#[inline]
pub(crate) fn axpy(alpha: f64, w: &[f32], y: &mut [f64]) {
    debug_assert_eq!(w.len(), y.len());
    for (yi, wi) in y.iter_mut().zip(w) {
        *yi += alpha * *wi as f64;
    }
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy64(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
