//! Brute-force metric oracle. Fixture values are multiples of 1/64, so every
//! sum is exact and the oracle can count in integers.

use affect_core::dataio::SourceKind;
use affect_core::evalreport::Prediction;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::rng;

pub const UNIT: f64 = 64.0;

/// Item in 1/64 units: predicted, target, sd, is_image.
#[derive(Debug, Clone, Copy)]
pub struct Ticks {
    pub pred: [i64; 3],
    pub target: [i64; 3],
    pub sd: [i64; 3],
    pub image: bool,
}

pub fn fixture(seed: u64, n: usize) -> Vec<Ticks> {
    let mut r: ChaCha8Rng = rng(seed);
    (0..n)
        .map(|_| {
            let target = [0; 3].map(|_| r.gen_range(0..=64));
            let sd = [0; 3].map(|_| r.gen_range(0..=24));
            let mut pred = [0; 3];
            for d in 0..3 {
                pred[d] = match r.gen_range(0..4) {
                    // exactly on the one-sd boundary
                    0 => (target[d] + if r.gen_bool(0.5) { sd[d] } else { -sd[d] }).clamp(0, 64),
                    _ => r.gen_range(0..=64),
                };
            }
            Ticks {
                pred,
                target,
                sd,
                image: r.gen_bool(0.3),
            }
        })
        .collect()
}

pub fn kind(t: &Ticks) -> SourceKind {
    if t.image {
        SourceKind::Image
    } else {
        SourceKind::Word
    }
}

pub fn to_predictions(items: &[Ticks]) -> Vec<Prediction> {
    items
        .iter()
        .map(|t| Prediction {
            predicted: t.pred.map(|v| v as f64 / UNIT),
            target: t.target.map(|v| v as f64 / UNIT),
            sd: t.sd.map(|v| v as f64 / UNIT),
            kind: kind(t),
        })
        .collect()
}

pub struct Brute {
    pub mae: f64,
    pub mae_text: Option<f64>,
    pub mae_image: Option<f64>,
    pub per_dim: [f64; 3],
    pub rmse: f64,
    pub within_pairs: f64,
    pub within_items: f64,
}

pub fn brute_force(items: &[Ticks]) -> Brute {
    let mut abs_total = 0i64;
    let mut sq_total = 0i64;
    let mut per_dim = [0i64; 3];
    let (mut text_abs, mut text_n, mut image_abs, mut image_n) = (0i64, 0i64, 0i64, 0i64);
    let mut pairs_in = 0i64;
    let mut items_in = 0i64;
    for t in items {
        let mut all = true;
        for d in 0..3 {
            let e = (t.pred[d] - t.target[d]).abs();
            abs_total += e;
            sq_total += e * e;
            per_dim[d] += e;
            if t.image {
                image_abs += e;
            } else {
                text_abs += e;
            }
            if e <= t.sd[d] {
                pairs_in += 1;
            } else {
                all = false;
            }
        }
        if t.image {
            image_n += 1;
        } else {
            text_n += 1;
        }
        items_in += all as i64;
    }
    let n = items.len() as i64;
    let mean =
        |total: i64, count: i64| (count > 0).then(|| (total as f64 / UNIT) / (3 * count) as f64);
    Brute {
        mae: mean(abs_total, n).unwrap(),
        mae_text: mean(text_abs, text_n),
        mae_image: mean(image_abs, image_n),
        per_dim: per_dim.map(|v| (v as f64 / UNIT) / n as f64),
        rmse: ((sq_total as f64 / (UNIT * UNIT)) / (3 * n) as f64).sqrt(),
        within_pairs: pairs_in as f64 / (3 * n) as f64,
        within_items: items_in as f64 / n as f64,
    }
}
