//! Test-set metrics and report tables.
//!
//! All errors are measured on the `[0,1]` affect scale, with predictions
//! clamped the same way [`AffectModel::score`] does.

use serde::{Deserialize, Serialize};

use crate::affect::AffectVector;
use crate::dataio::{Dataset, SourceKind};
use crate::error::{Error, Result};
use crate::grid::EmbeddingGrid;
use crate::predictor::{AffectModel, ChannelEnsemble};

/// One scored item, everything on the `[0,1]` scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub predicted: [f64; 3],
    pub target: [f64; 3],
    pub sd: [f64; 3],
    pub kind: SourceKind,
}

pub fn predictions(model: &AffectModel, ds: &Dataset) -> Result<Vec<Prediction>> {
    ds.samples
        .iter()
        .map(|s| {
            let predicted = model.score(&s.input)?.0;
            let (target, sd) = model.scale_targets(&s.mean, &s.sd)?;
            Ok(Prediction {
                predicted,
                target,
                sd,
                kind: s.kind,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindErrors {
    /// MAE pooled over items and dimensions.
    pub pooled: f64,
    pub text: Option<f64>,
    pub image: Option<f64>,
    pub per_dimension: [f64; 3],
    /// Root of the mean squared error, pooled the same way.
    pub rmse: f64,
}

pub fn errors_by_kind(items: &[Prediction]) -> Result<KindErrors> {
    if items.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    // one division at the end, so exactly representable sums give the
    // correctly rounded mean
    let abs = |p: &Prediction| -> f64 {
        (0..3)
            .map(|d| (p.predicted[d] - p.target[d]).abs())
            .sum::<f64>()
    };
    let pooled = |sel: &mut dyn Iterator<Item = &Prediction>| {
        let (sum, count) = sel.fold((0.0, 0usize), |(s, c), p| (s + abs(p), c + 1));
        (count > 0).then(|| sum / (3 * count) as f64)
    };
    let kind_mae = |kind: SourceKind| pooled(&mut items.iter().filter(|p| p.kind == kind));
    let n = items.len() as f64;
    let mut per_dimension = [0.0; 3];
    let mut sq = 0.0;
    for p in items {
        for (acc, (y, t)) in per_dimension
            .iter_mut()
            .zip(p.predicted.iter().zip(&p.target))
        {
            let e = y - t;
            *acc += e.abs();
            sq += e * e;
        }
    }
    let per_dimension = per_dimension.map(|s| s / n);
    Ok(KindErrors {
        pooled: pooled(&mut items.iter()).expect("non-empty"),
        text: kind_mae(SourceKind::Word),
        image: kind_mae(SourceKind::Image),
        per_dimension,
        rmse: (sq / (3.0 * n)).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WithinSd {
    /// Share of (item, dimension) pairs with `|pred - mean| <= sd`.
    pub pairwise: f64,
    /// Share of items where all three dimensions are within one sd.
    pub all_dims: f64,
}

pub fn within_sd(items: &[Prediction]) -> Result<WithinSd> {
    if items.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let hit = |p: &Prediction, d: usize| (p.predicted[d] - p.target[d]).abs() <= p.sd[d];
    let pairs = items
        .iter()
        .map(|p| (0..3).filter(|&d| hit(p, d)).count())
        .sum::<usize>();
    let full = items.iter().filter(|p| (0..3).all(|d| hit(p, d))).count();
    Ok(WithinSd {
        pairwise: pairs as f64 / (3 * items.len()) as f64,
        all_dims: full as f64 / items.len() as f64,
    })
}

pub fn mean_error(model: &AffectModel, test: &Dataset) -> Result<KindErrors> {
    errors_by_kind(&predictions(model, test)?)
}

/// Pairwise within-one-sd fraction.
pub fn within_sd_fraction(model: &AffectModel, test: &Dataset) -> Result<f64> {
    Ok(within_sd(&predictions(model, test)?)?.pairwise)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mae: f64,
    pub mae_text: Option<f64>,
    pub mae_image: Option<f64>,
    pub rmse: f64,
    pub per_dimension_mae: [f64; 3],
    pub within_sd_fraction: f64,
    pub within_sd_all_dims: f64,
    pub count_text: usize,
    pub count_image: usize,
}

impl EvalReport {
    pub fn from_predictions(items: &[Prediction]) -> Result<Self> {
        let e = errors_by_kind(items)?;
        let w = within_sd(items)?;
        Ok(Self {
            mae: e.pooled,
            mae_text: e.text,
            mae_image: e.image,
            rmse: e.rmse,
            per_dimension_mae: e.per_dimension,
            within_sd_fraction: w.pairwise,
            within_sd_all_dims: w.all_dims,
            count_text: items.iter().filter(|p| p.kind == SourceKind::Word).count(),
            count_image: items.iter().filter(|p| p.kind == SourceKind::Image).count(),
        })
    }

    pub fn render(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into());
        let lines = [
            ("items (text)", self.count_text.to_string()),
            ("items (image)", self.count_image.to_string()),
            ("mean error (text)", opt(self.mae_text)),
            ("mean error (image)", opt(self.mae_image)),
            ("mean error (all)", format!("{:.4}", self.mae)),
            ("rmse (all)", format!("{:.4}", self.rmse)),
            (
                "mean error V/A/D",
                format!(
                    "{:.4} / {:.4} / {:.4}",
                    self.per_dimension_mae[0], self.per_dimension_mae[1], self.per_dimension_mae[2]
                ),
            ),
            (
                "within 1 sd (pairs)",
                format!("{:.4}", self.within_sd_fraction),
            ),
            (
                "within 1 sd (items)",
                format!("{:.4}", self.within_sd_all_dims),
            ),
        ];
        lines
            .iter()
            .map(|(k, v)| format!("{k:<22}{v:>22}\n"))
            .collect()
    }
}

pub fn evaluate(model: &AffectModel, test: &Dataset) -> Result<EvalReport> {
    EvalReport::from_predictions(&predictions(model, test)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub prompt: String,
    pub valence: f64,
    pub arousal: f64,
    pub dominance: f64,
}

impl ScoreRow {
    pub fn new(prompt: impl Into<String>, score: AffectVector) -> Self {
        Self {
            prompt: prompt.into(),
            valence: score.valence(),
            arousal: score.arousal(),
            dominance: score.dominance(),
        }
    }

    pub fn score(&self) -> AffectVector {
        AffectVector::new(self.valence, self.arousal, self.dominance)
    }
}

/// Prompt scores in input order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
    /// How multi-channel scores were reduced to one vector, if they were.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub aggregation: Option<String>,
}

impl ScoreTable {
    pub fn render(&self) -> String {
        if self.rows.is_empty() {
            return String::new();
        }
        let width = self
            .rows
            .iter()
            .map(|r| r.prompt.chars().count())
            .max()
            .unwrap_or(0)
            .max(6);
        let mut out = format!("{:<width$}  {:>5}  {:>5}  {:>5}\n", "prompt", "V", "A", "D");
        for r in &self.rows {
            out.push_str(&format!(
                "{:<width$}  {:.3}  {:.3}  {:.3}\n",
                r.prompt, r.valence, r.arousal, r.dominance
            ));
        }
        if let Some(a) = &self.aggregation {
            out.push_str(&format!("({a})\n"));
        }
        out
    }

    pub fn get(&self, prompt: &str) -> Option<&ScoreRow> {
        self.rows.iter().find(|r| r.prompt == prompt)
    }
}

pub fn prompt_score_table(
    model: &AffectModel,
    prompts: &[(String, Vec<f32>)],
) -> Result<ScoreTable> {
    let rows = prompts
        .iter()
        .map(|(p, e)| Ok(ScoreRow::new(p.clone(), model.score(e)?)))
        .collect::<Result<_>>()?;
    Ok(ScoreTable {
        rows,
        aggregation: None,
    })
}

/// Same table for prompt grids; each row is the channel mean of the
/// ensemble's per-channel scores.
pub fn prompt_score_table_grids(
    ensemble: &ChannelEnsemble,
    grids: &[EmbeddingGrid],
) -> Result<ScoreTable> {
    let rows = grids
        .iter()
        .map(|g| {
            Ok(ScoreRow::new(
                g.prompt.clone(),
                ensemble.score_grid_mean(g)?,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(ScoreTable {
        rows,
        aggregation: Some("mean over 77 channel scores".into()),
    })
}
