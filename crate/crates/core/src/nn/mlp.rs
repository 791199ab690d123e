use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dropout::{dropout_mask, DropoutSpec};
use super::{axpy, axpy64, dot};
use crate::error::{check_dim, Error, Result};

/// Hidden widths of the affect predictor.
pub const AFFECT_HIDDEN: [usize; 2] = [64, 32];

/// Fully connected layer, `y = W x + b` with `W` stored row-major as
/// `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
}

impl DenseLayer {
    pub fn new(in_dim: usize, out_dim: usize, weights: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidConfig(format!(
                "layer dims must be positive, got {in_dim}->{out_dim}"
            )));
        }
        check_dim("layer weights", in_dim * out_dim, weights.len())?;
        check_dim("layer bias", out_dim, bias.len())?;
        if !weights.iter().chain(&bias).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("layer parameters"));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            bias,
        })
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    /// He-style uniform init: `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, zero bias.
    pub fn he_uniform(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let bound = (6.0 / in_dim as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-bound..bound) as f32)
            .collect();
        Self {
            in_dim,
            out_dim,
            weights,
            bias: vec![0.0; out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f32] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f32] {
        &mut self.bias
    }

    pub fn params_mut(&mut self) -> (&mut [f32], &mut [f32]) {
        (&mut self.weights, &mut self.bias)
    }

    pub fn row(&self, j: usize) -> &[f32] {
        &self.weights[j * self.in_dim..(j + 1) * self.in_dim]
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.out_dim)
            .map(|j| self.bias[j] as f64 + dot(self.row(j), x))
            .collect()
    }
}

/// Multilayer perceptron with ReLU on every hidden layer and an identity
/// output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
}

/// Activations recorded during a forward pass, consumed by the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[l]` is what layer `l` saw (after ReLU and dropout of layer `l-1`).
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of every layer; the last one is the network output.
    pre: Vec<Vec<f64>>,
    /// Dropout multipliers applied to each hidden layer's output.
    masks: Vec<Option<Vec<f64>>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.pre.last().expect("mlp has at least one layer")
    }

    pub fn pre_activations(&self) -> &[Vec<f64>] {
        &self.pre
    }
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("mlp layers"));
        }
        for pair in layers.windows(2) {
            check_dim("mlp layer chain", pair[0].out_dim, pair[1].in_dim)?;
        }
        Ok(Self { layers })
    }

    /// Seeded He-uniform network with the given layer widths
    /// (`dims = [input, hidden.., output]`).
    pub fn init(dims: &[usize], seed: u64) -> Result<Self> {
        Self::check_dims(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new(
            dims.windows(2)
                .map(|w| DenseLayer::he_uniform(w[0], w[1], &mut rng))
                .collect(),
        )
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::check_dims(dims)?;
        Self::new(
            dims.windows(2)
                .map(|w| DenseLayer::zeros(w[0], w[1]))
                .collect(),
        )
    }

    /// `input -> 64 -> 32 -> 3`.
    pub fn affect_dims(input_dim: usize) -> Vec<usize> {
        let mut dims = vec![input_dim];
        dims.extend(AFFECT_HIDDEN);
        dims.push(3);
        dims
    }

    fn check_dims(dims: &[usize]) -> Result<()> {
        if dims.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least input and output widths, got {dims:?}"
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidConfig(format!("zero width in {dims:?}")));
        }
        Ok(())
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    /// `[input, hidden.., output]`
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.out_dim))
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// Inference pass, or a training pass when `dropout` is given. The same
    /// dropout seed always draws the same masks.
    pub fn forward(&self, input: &[f64], dropout: Option<&DropoutSpec>) -> Result<Vec<f64>> {
        let cache = match dropout {
            Some(spec) => {
                spec.validate()?;
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                self.forward_cached(input, Some((spec.rate, &mut rng)))?
            }
            None => self.forward_cached(input, None)?,
        };
        Ok(cache.output().to_vec())
    }

    pub fn forward_cached(
        &self,
        input: &[f64],
        mut dropout: Option<(f64, &mut dyn RngCore)>,
    ) -> Result<ForwardCache> {
        check_dim("mlp input", self.input_dim(), input.len())?;
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        let mut masks = Vec::with_capacity(n.saturating_sub(1));
        let mut x = input.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.apply(&x);
            inputs.push(x);
            if l + 1 < n {
                let mut h: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
                let mask = match dropout.as_mut() {
                    Some((rate, rng)) if *rate > 0.0 => {
                        let m = dropout_mask(h.len(), *rate, &mut **rng);
                        h.iter_mut().zip(&m).for_each(|(v, k)| *v *= k);
                        Some(m)
                    }
                    _ => None,
                };
                masks.push(mask);
                x = h;
            } else {
                x = Vec::new();
            }
            pre.push(z);
        }
        Ok(ForwardCache { inputs, pre, masks })
    }

    /// Exact gradients of `upstream . f(input)` with respect to every
    /// parameter and to the input. Runs its own dropout-free forward pass.
    pub fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<(MlpGrads, Vec<f64>)> {
        let cache = self.forward_cached(input, None)?;
        let mut grads = MlpGrads::zeros_like(self);
        let input_grad = self
            .backward_into(&cache, upstream, &mut grads, true)?
            .expect("input gradient requested");
        Ok((grads, input_grad))
    }

    /// Gradient of `upstream . f(input)` with respect to the input only.
    pub fn input_gradient(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let cache = self.forward_cached(input, None)?;
        self.input_gradient_cached(&cache, upstream)
    }

    /// [`Mlp::input_gradient`] reusing a forward pass already taken.
    pub fn input_gradient_cached(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
    ) -> Result<Vec<f64>> {
        let delta = self.backprop_hidden(cache, upstream, None)?;
        let first = &self.layers[0];
        let mut gx = vec![0.0; first.in_dim];
        for (j, d) in delta.iter().enumerate() {
            if *d != 0.0 {
                axpy(*d, first.row(j), &mut gx);
            }
        }
        Ok(gx)
    }

    /// Accumulates parameter gradients into `grads` (adds, does not overwrite).
    /// Returns the input gradient when `want_input` is set.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
        grads: &mut MlpGrads,
        want_input: bool,
    ) -> Result<Option<Vec<f64>>> {
        check_dim("mlp grads", self.param_count(), grads.flat.len())?;
        let delta = self.backprop_hidden(cache, upstream, Some(grads))?;
        let first = &self.layers[0];
        let (w, b) = grads.layer_mut(0);
        for (j, d) in delta.iter().enumerate() {
            b[j] += d;
            if *d != 0.0 {
                axpy64(
                    *d,
                    &cache.inputs[0],
                    &mut w[j * first.in_dim..(j + 1) * first.in_dim],
                );
            }
        }
        if !want_input {
            return Ok(None);
        }
        let mut gx = vec![0.0; first.in_dim];
        for (j, d) in delta.iter().enumerate() {
            if *d != 0.0 {
                axpy(*d, first.row(j), &mut gx);
            }
        }
        Ok(Some(gx))
    }

    /// Walks from the output down to layer 0, accumulating parameter
    /// gradients for layers `1..` when `grads` is given. Returns the gradient
    /// with respect to layer 0's pre-activation.
    fn backprop_hidden(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
        mut grads: Option<&mut MlpGrads>,
    ) -> Result<Vec<f64>> {
        check_dim("mlp upstream gradient", self.output_dim(), upstream.len())?;
        let mut delta = upstream.to_vec();
        for l in (1..self.layers.len()).rev() {
            let layer = &self.layers[l];
            if let Some(g) = grads.as_deref_mut() {
                let (w, b) = g.layer_mut(l);
                for (j, d) in delta.iter().enumerate() {
                    b[j] += d;
                    if *d != 0.0 {
                        axpy64(
                            *d,
                            &cache.inputs[l],
                            &mut w[j * layer.in_dim..(j + 1) * layer.in_dim],
                        );
                    }
                }
            }
            let mut g_in = vec![0.0; layer.in_dim];
            for (j, d) in delta.iter().enumerate() {
                if *d != 0.0 {
                    axpy(*d, layer.row(j), &mut g_in);
                }
            }
            // through dropout and ReLU of layer l-1
            let z = &cache.pre[l - 1];
            if let Some(mask) = &cache.masks[l - 1] {
                g_in.iter_mut().zip(mask).for_each(|(g, m)| *g *= m);
            }
            g_in.iter_mut().zip(z).for_each(|(g, zi)| {
                if *zi <= 0.0 {
                    *g = 0.0
                }
            });
            delta = g_in;
        }
        Ok(delta)
    }
}

/// Parameter gradients laid out like the network: for each layer, the
/// row-major weight block followed by the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    shapes: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    flat: Vec<f64>,
}

impl MlpGrads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        let shapes: Vec<_> = mlp.layers.iter().map(|l| (l.out_dim, l.in_dim)).collect();
        let mut offsets = Vec::with_capacity(shapes.len());
        let mut total = 0;
        for (o, i) in &shapes {
            offsets.push(total);
            total += o * i + o;
        }
        Self {
            shapes,
            offsets,
            flat: vec![0.0; total],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.flat
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.flat
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        let (o, i) = self.shapes[layer];
        let start = self.offsets[layer];
        &self.flat[start..start + o * i]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        let (o, i) = self.shapes[layer];
        let start = self.offsets[layer] + o * i;
        &self.flat[start..start + o]
    }

    fn layer_mut(&mut self, layer: usize) -> (&mut [f64], &mut [f64]) {
        let (o, i) = self.shapes[layer];
        let start = self.offsets[layer];
        self.flat[start..start + o * i + o].split_at_mut(o * i)
    }

    pub fn scale(&mut self, factor: f64) {
        self.flat.iter_mut().for_each(|g| *g *= factor);
    }

    pub fn fill_zero(&mut self) {
        self.flat.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn is_zero(&self) -> bool {
        self.flat.iter().all(|g| *g == 0.0)
    }
}
