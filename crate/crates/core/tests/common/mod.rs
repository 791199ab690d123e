//! Fixtures and independent oracles shared by the integration suites.
#![allow(dead_code)]

pub mod tally;

use affect_core::dataio::{Dataset, Sample, Scaler, SourceKind};
use affect_core::nn::{DenseLayer, Mlp};
use affect_core::{
    AffectModel, ChannelEnsemble, EmbeddingGrid, ModelKind, CHANNEL_DIM, GRID_CHANNELS,
};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Relative error with a floor on the denominator so that gradients that are
/// zero up to rounding compare on an absolute scale.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Central difference of `f` along coordinate `i` of `x`, dividing by the
/// perturbation that was actually applied.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut p = x.to_vec();
    p[i] = x[i] + h;
    let up = f(&p);
    let hi = p[i];
    p[i] = x[i] - h;
    let down = f(&p);
    (up - down) / (hi - p[i])
}

/// Plain three-loop forward pass of a ReLU network, independent of the
/// library's kernels.
pub fn reference_forward(mlp: &Mlp, x: &[f64]) -> Vec<f64> {
    let n = mlp.layers().len();
    let mut h = x.to_vec();
    for (l, layer) in mlp.layers().iter().enumerate() {
        let mut z = vec![0.0; layer.out_dim()];
        for j in 0..layer.out_dim() {
            let mut s = layer.bias()[j] as f64;
            for i in 0..layer.in_dim() {
                s += layer.weights()[j * layer.in_dim() + i] as f64 * h[i];
            }
            z[j] = if l + 1 < n { s.max(0.0) } else { s };
        }
        h = z;
    }
    h
}

/// Activation pattern of every hidden unit.
pub fn relu_pattern(mlp: &Mlp, x: &[f64]) -> Vec<bool> {
    let cache = mlp.forward_cached(x, None).unwrap();
    let pre = cache.pre_activations();
    pre[..pre.len() - 1]
        .iter()
        .flatten()
        .map(|z| *z > 0.0)
        .collect()
}

/// Smallest |pre-activation| over hidden units.
pub fn min_margin(mlp: &Mlp, x: &[f64]) -> f64 {
    let cache = mlp.forward_cached(x, None).unwrap();
    let pre = cache.pre_activations();
    pre[..pre.len() - 1]
        .iter()
        .flatten()
        .map(|z| z.abs())
        .fold(f64::INFINITY, f64::min)
}

/// Random network with non-zero biases.
pub fn random_mlp(dims: &[usize], seed: u64) -> Mlp {
    let mut r = rng(seed ^ 0x5eed);
    let mut mlp = Mlp::init(dims, seed).unwrap();
    for l in mlp.layers_mut() {
        for b in l.bias_mut() {
            *b = r.gen_range(-0.2..0.2);
        }
    }
    mlp
}

pub fn random_scaler(dim: usize, r: &mut ChaCha8Rng) -> Scaler {
    let lo: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..0.0)).collect();
    let hi: Vec<f64> = lo.iter().map(|l| l + r.gen_range(0.5..2.0)).collect();
    Scaler::new(lo, hi).unwrap()
}

pub fn random_affect_model(kind: ModelKind, seed: u64) -> AffectModel {
    let d = kind.input_dim();
    let mut r = rng(seed);
    AffectModel::new(
        random_mlp(&Mlp::affect_dims(d), seed),
        random_scaler(d, &mut r),
        Scaler::new(vec![1.0; 3], vec![9.0; 3]).unwrap(),
        kind,
    )
    .unwrap()
}

pub fn random_ensemble(seed: u64) -> ChannelEnsemble {
    ChannelEnsemble::new(
        (0..GRID_CHANNELS)
            .map(|c| random_affect_model(ModelKind::Channel(c), seed * 1000 + c as u64))
            .collect(),
    )
    .unwrap()
}

pub fn random_grid(prompt: &str, seed: u64, scale: f64) -> EmbeddingGrid {
    let mut r = rng(seed);
    EmbeddingGrid::new(
        prompt,
        (0..GRID_CHANNELS * CHANNEL_DIM)
            .map(|_| r.gen_range(-scale..scale))
            .collect(),
    )
    .unwrap()
}

/// Affine channel predictor `A(z) = W z + a` (single linear layer, identity
/// embedding scaler).
pub struct AffineChannel {
    pub w: DMatrix<f64>,
    pub a: Vector3<f64>,
}

pub fn affine_ensemble(seed: u64, weight_scale: f64) -> (ChannelEnsemble, Vec<AffineChannel>) {
    let mut r = rng(seed);
    let mut models = Vec::new();
    let mut truth = Vec::new();
    for c in 0..GRID_CHANNELS {
        let w32: Vec<f32> = (0..3 * CHANNEL_DIM)
            .map(|_| r.gen_range(-weight_scale..weight_scale) as f32)
            .collect();
        let a32: Vec<f32> = (0..3).map(|_| r.gen_range(0.0..1.0) as f32).collect();
        let w = DMatrix::from_row_slice(
            3,
            CHANNEL_DIM,
            &w32.iter().map(|v| *v as f64).collect::<Vec<_>>(),
        );
        let a = Vector3::new(a32[0] as f64, a32[1] as f64, a32[2] as f64);
        let layer = DenseLayer::new(CHANNEL_DIM, 3, w32, a32).unwrap();
        models.push(
            AffectModel::new(
                Mlp::new(vec![layer]).unwrap(),
                Scaler::unit(CHANNEL_DIM),
                Scaler::unit(3),
                ModelKind::Channel(c),
            )
            .unwrap(),
        );
        truth.push(AffineChannel { w, a });
    }
    (ChannelEnsemble::new(models).unwrap(), truth)
}

/// Minimizer of `|b - z|^2 + lambda |W z + a - v0|^2` from the normal
/// equations `(I + lambda W^T W) z = b + lambda W^T (v0 - a)`, solved through
/// the 3x3 push-through identity.
pub fn ridge_solution(ch: &AffineChannel, anchor: &[f64], v0: [f64; 3], lambda: f64) -> Vec<f64> {
    let b = DVector::from_column_slice(anchor);
    let v0 = Vector3::new(v0[0], v0[1], v0[2]);
    let wb = &ch.w * &b;
    let r = v0 - ch.a - Vector3::new(wb[0], wb[1], wb[2]);
    let wwt = &ch.w * ch.w.transpose();
    let k = Matrix3::identity() + lambda * Matrix3::from_iterator(wwt.iter().copied());
    let y = k
        .lu()
        .solve(&r)
        .expect("I + lambda W W^T is positive definite");
    let delta = ch.w.transpose() * DVector::from_column_slice(y.as_slice()) * lambda;
    (b + delta).iter().copied().collect()
}

/// Full `768 x 768` normal-equation solve, for cross-checking
/// [`ridge_solution`] on one channel.
pub fn ridge_solution_dense(
    ch: &AffineChannel,
    anchor: &[f64],
    v0: [f64; 3],
    lambda: f64,
) -> Vec<f64> {
    let n = anchor.len();
    let lhs = DMatrix::<f64>::identity(n, n) + lambda * ch.w.transpose() * &ch.w;
    let v0 = Vector3::new(v0[0], v0[1], v0[2]);
    let rhs = DVector::from_column_slice(anchor)
        + lambda * ch.w.transpose() * DVector::from_column_slice((v0 - ch.a).as_slice());
    lhs.cholesky()
        .expect("SPD")
        .solve(&rhs)
        .iter()
        .copied()
        .collect()
}

/// Synthetic joint-space dataset: `x ~ U(0,1)^dim`, survey-scale targets
/// `clamp(W x + b, 0, 1) * 8 + 1`, constant sd 1.
pub fn affine_dataset(n: usize, dim: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let w: Vec<f64> = (0..3 * dim)
        .map(|_| r.gen_range(-1.0..1.0) * (3.0 / dim as f64).sqrt())
        .collect();
    let b: Vec<f64> = (0..3)
        .map(|d| 0.5 - w[d * dim..(d + 1) * dim].iter().sum::<f64>() * 0.5)
        .collect();
    let samples = (0..n)
        .map(|i| {
            let x: Vec<f32> = (0..dim).map(|_| r.gen_range(0.0f32..1.0)).collect();
            let mut mean = [0.0; 3];
            for d in 0..3 {
                let y = b[d] + (0..dim).map(|k| w[d * dim + k] * x[k] as f64).sum::<f64>();
                mean[d] = y.clamp(0.0, 1.0) * 8.0 + 1.0;
            }
            Sample {
                key: format!("w{i}"),
                input: x,
                mean,
                sd: [1.0; 3],
                kind: SourceKind::Word,
            }
        })
        .collect();
    Dataset::new(samples).unwrap()
}

/// Which scalar of a network a probe perturbs.
#[derive(Debug, Clone, Copy)]
pub enum Probe {
    Weight { layer: usize, index: usize },
    Bias { layer: usize, index: usize },
    Input(usize),
}

/// Central difference of `u . mlp(x)` along one parameter or input
/// coordinate. `None` when the perturbation flips a ReLU, where the function
/// has a kink and the difference quotient is not a derivative.
pub fn mlp_probe_diff(mlp: &Mlp, x: &[f64], u: &[f64], probe: Probe, h: f64) -> Option<f64> {
    let f = |m: &Mlp, x: &[f64]| -> f64 {
        reference_forward(m, x)
            .iter()
            .zip(u)
            .map(|(a, b)| a * b)
            .sum()
    };
    let base = relu_pattern(mlp, x);
    match probe {
        Probe::Input(i) => {
            let mut xp = x.to_vec();
            xp[i] += h;
            let mut xm = x.to_vec();
            xm[i] -= h;
            if relu_pattern(mlp, &xp) != base || relu_pattern(mlp, &xm) != base {
                return None;
            }
            Some((f(mlp, &xp) - f(mlp, &xm)) / (xp[i] - xm[i]))
        }
        Probe::Weight { layer, index } | Probe::Bias { layer, index } => {
            let is_bias = matches!(probe, Probe::Bias { .. });
            let shifted = |delta: f64| -> (Mlp, f64) {
                let mut m = mlp.clone();
                let l = &mut m.layers_mut()[layer];
                let slot = if is_bias {
                    &mut l.bias_mut()[index]
                } else {
                    &mut l.weights_mut()[index]
                };
                *slot = (*slot as f64 + delta) as f32;
                let applied = *slot as f64;
                (m, applied)
            };
            let (mp, hi) = shifted(h);
            let (mm, lo) = shifted(-h);
            if relu_pattern(&mp, x) != base || relu_pattern(&mm, x) != base {
                return None;
            }
            Some((f(&mp, x) - f(&mm, x)) / (hi - lo))
        }
    }
}

/// Random probes over all parameters and inputs of `mlp`.
pub fn random_probes(mlp: &Mlp, count: usize, r: &mut ChaCha8Rng) -> Vec<Probe> {
    (0..count)
        .map(|_| {
            let layer = r.gen_range(0..mlp.layers().len());
            let l = &mlp.layers()[layer];
            match r.gen_range(0..3) {
                0 => Probe::Weight {
                    layer,
                    index: r.gen_range(0..l.weights().len()),
                },
                1 => Probe::Bias {
                    layer,
                    index: r.gen_range(0..l.bias().len()),
                },
                _ => Probe::Input(r.gen_range(0..mlp.input_dim())),
            }
        })
        .collect()
}

/// Outcome of one finite-difference instance.
#[derive(Debug, Default, Clone, Copy)]
pub struct FdOutcome {
    pub checked: usize,
    pub skipped: usize,
    pub worst: f64,
}

impl FdOutcome {
    pub fn record(&mut self, analytic: f64, numeric: Option<f64>) {
        match numeric {
            Some(n) => {
                self.checked += 1;
                self.worst = self.worst.max(rel_err(analytic, n));
            }
            None => self.skipped += 1,
        }
    }
}

/// One random backward-pass instance: network shape, input, upstream vector
/// and probes all drawn from `seed`.
pub fn mlp_backward_instance(seed: u64, h: f64) -> FdOutcome {
    let mut r = rng(seed);
    let dims: Vec<usize> = match seed % 4 {
        0 => Mlp::affect_dims(512),
        1 => Mlp::affect_dims(768),
        2 => vec![
            r.gen_range(2..12),
            r.gen_range(2..12),
            r.gen_range(2..12),
            3,
        ],
        _ => vec![r.gen_range(2..40), r.gen_range(2..20), 3],
    };
    let mlp = random_mlp(&dims, seed);
    let x: Vec<f64> = (0..dims[0]).map(|_| r.gen_range(-1.0..1.0)).collect();
    let u: Vec<f64> = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
    let (grads, input_grad) = mlp.backward(&x, &u).unwrap();
    let mut out = FdOutcome::default();
    for probe in random_probes(&mlp, 24, &mut r) {
        let analytic = match probe {
            Probe::Weight { layer, index } => grads.weights(layer)[index],
            Probe::Bias { layer, index } => grads.bias(layer)[index],
            Probe::Input(i) => input_grad[i],
        };
        out.record(analytic, mlp_probe_diff(&mlp, &x, &u, probe, h));
    }
    out
}

/// Embedding in raw (unscaled) coordinates that lands inside the model's
/// scaler range.
pub fn random_embedding(model: &AffectModel, r: &mut ChaCha8Rng) -> Vec<f64> {
    let s = model.embedding_scaler();
    s.min()
        .iter()
        .zip(s.max())
        .map(|(lo, hi)| r.gen_range(*lo..*hi))
        .collect()
}

pub fn random_target(r: &mut ChaCha8Rng) -> affect_core::AffectTarget {
    affect_core::AffectTarget::new(affect_core::AffectVector::new(
        r.gen_range(0.0..1.0),
        r.gen_range(0.0..1.0),
        r.gen_range(0.0..1.0),
    ))
    .unwrap()
}

fn scaled_pattern(model: &AffectModel, e: &[f64]) -> Vec<bool> {
    relu_pattern(model.mlp(), &model.embedding_scaler().apply(e).unwrap())
}

/// One random `affect_penalty` instance, probing input coordinates.
pub fn penalty_instance(seed: u64, h: f64) -> FdOutcome {
    let mut r = rng(seed ^ 0xa11ce);
    let kind = if seed % 2 == 0 {
        ModelKind::Joint
    } else {
        ModelKind::Channel((seed % 77) as usize)
    };
    let model = random_affect_model(kind, seed);
    let e = random_embedding(&model, &mut r);
    let target = random_target(&mut r);
    let lambda = 10f64.powf(r.gen_range(-1.0..1.0));
    let (_, grad) = affect_core::steering::affect_penalty(&model, &e, &target, lambda).unwrap();
    let base = scaled_pattern(&model, &e);
    let f = |v: &[f64]| {
        affect_core::steering::affect_penalty(&model, v, &target, lambda)
            .unwrap()
            .0
    };
    let mut out = FdOutcome::default();
    for _ in 0..24 {
        let i = r.gen_range(0..e.len());
        let mut ep = e.clone();
        ep[i] += h;
        let mut em = e.clone();
        em[i] -= h;
        let numeric = (scaled_pattern(&model, &ep) == base && scaled_pattern(&model, &em) == base)
            .then(|| central_diff(f, &e, i, h));
        out.record(grad[i], numeric);
    }
    out
}

/// Random grid near `anchor`, for objective checks away from the minimum.
pub fn perturbed_grid(anchor: &EmbeddingGrid, scale: f64, r: &mut ChaCha8Rng) -> EmbeddingGrid {
    EmbeddingGrid::new(
        anchor.prompt.clone(),
        anchor
            .values()
            .iter()
            .map(|v| v + r.gen_range(-scale..scale))
            .collect(),
    )
    .unwrap()
}

/// `|z_c - b_c|^2 + lambda |A_c(z_c) - v0|^2` computed with the reference
/// forward pass.
pub fn reference_channel_term(
    model: &AffectModel,
    z: &[f64],
    b: &[f64],
    v0: &[f64; 3],
    lambda: f64,
) -> f64 {
    let x = model.embedding_scaler().apply(z).unwrap();
    let a = reference_forward(model.mlp(), &x);
    let dist: f64 = z.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
    let pen: f64 = a.iter().zip(v0).map(|(p, q)| (p - q) * (p - q)).sum();
    dist + lambda * pen
}

/// Random instances of the grid objective sharing one ensemble; each checks
/// `coords` random coordinates against central differences of the reference
/// objective (per-channel terms are cached, only the perturbed channel is
/// recomputed). Also returns the worst relative gap between the library's
/// loss value and the reference sum.
pub fn grid_objective_instances(
    ensemble: &ChannelEnsemble,
    seed: u64,
    instances: usize,
    coords: usize,
    h: f64,
) -> (Vec<FdOutcome>, f64) {
    let mut r = rng(seed);
    let mut loss_gap: f64 = 0.0;
    let outcomes = (0..instances)
        .map(|k| {
            let anchor = random_grid("p", seed * 1000 + k as u64, 1.0);
            let z = perturbed_grid(&anchor, 0.1, &mut r);
            let target = random_target(&mut r);
            let v0 = target.v0.0;
            let lambda = 10f64.powf(r.gen_range(-1.0..1.0));
            let (loss, grad) =
                affect_core::steering::eval_sd_objective(ensemble, &z, &anchor, &target, lambda)
                    .unwrap();
            let terms: Vec<f64> = (0..GRID_CHANNELS)
                .map(|c| {
                    reference_channel_term(
                        ensemble.model(c),
                        z.channel(c),
                        anchor.channel(c),
                        &v0,
                        lambda,
                    )
                })
                .collect();
            let total_with = |c: usize, term: f64| -> f64 {
                terms
                    .iter()
                    .enumerate()
                    .map(|(j, t)| if j == c { term } else { *t })
                    .sum()
            };
            let reference: f64 = terms.iter().sum();
            loss_gap = loss_gap.max((loss - reference).abs() / reference.abs().max(1e-300));
            let mut out = FdOutcome::default();
            for _ in 0..coords {
                let c = r.gen_range(0..GRID_CHANNELS);
                let i = r.gen_range(0..CHANNEL_DIM);
                let model = ensemble.model(c);
                let zc = z.channel(c);
                let base = scaled_pattern(model, zc);
                let mut up = zc.to_vec();
                up[i] += h;
                let mut down = zc.to_vec();
                down[i] -= h;
                let stable =
                    scaled_pattern(model, &up) == base && scaled_pattern(model, &down) == base;
                let numeric = stable.then(|| {
                    let fu = total_with(
                        c,
                        reference_channel_term(model, &up, anchor.channel(c), &v0, lambda),
                    );
                    let fd = total_with(
                        c,
                        reference_channel_term(model, &down, anchor.channel(c), &v0, lambda),
                    );
                    (fu - fd) / (up[i] - down[i])
                });
                out.record(grad[c * CHANNEL_DIM + i], numeric);
            }
            out
        })
        .collect();
    (outcomes, loss_gap)
}

/// Lexicon entries and a `(n, 77, 768)` grid container where every channel
/// holds the same small task: `clusters` random centres, each item a noisy
/// copy of one centre, with that centre's affect target plus a little jitter.
pub fn cluster_grid_fixture(
    n: usize,
    clusters: usize,
    seed: u64,
) -> (
    Vec<affect_core::dataio::LexiconEntry>,
    affect_core::dataio::EmbeddingContainer,
) {
    let mut r = rng(seed);
    let centres: Vec<Vec<f32>> = (0..clusters)
        .map(|_| {
            (0..CHANNEL_DIM)
                .map(|_| r.gen_range(-1.0f32..1.0))
                .collect()
        })
        .collect();
    let targets: Vec<[f64; 3]> = (0..clusters)
        .map(|_| [0, 1, 2].map(|_| r.gen_range(2.0..8.0)))
        .collect();
    let mut entries = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * GRID_CHANNELS * CHANNEL_DIM);
    for i in 0..n {
        let c = i % clusters;
        let row: Vec<f32> = centres[c]
            .iter()
            .map(|v| v + r.gen_range(-0.02f32..0.02))
            .collect();
        for _ in 0..GRID_CHANNELS {
            data.extend_from_slice(&row);
        }
        entries.push(affect_core::dataio::LexiconEntry {
            word: format!("w{i}"),
            mean: targets[c].map(|t| t + r.gen_range(-0.15..0.15)),
            sd: [1.0; 3],
        });
    }
    let keys = entries.iter().map(|e| e.word.clone()).collect();
    let container = affect_core::dataio::EmbeddingContainer::new(
        vec![n, GRID_CHANNELS, CHANNEL_DIM],
        keys,
        data,
    )
    .unwrap();
    (entries, container)
}
