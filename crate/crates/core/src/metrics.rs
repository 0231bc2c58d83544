//! Hierarchy-aware evaluation: top-1 accuracy, average mistake severity and
//! hierarchical distance@k.
//!
//! LCA heights are integers, so every metric is an exact integer total divided
//! once. Results are therefore the correctly rounded value of the underlying
//! ratio and independent of summation order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scorespace::{top_k, Ranking, ScoreError, ScoreMatrix};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("EmptyInput: no samples to evaluate")]
    EmptyInput,
    #[error("LengthMismatch: {predictions} predictions for {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("KTooLarge: k={k} but only {available} ranked classes are available")]
    KTooLarge { k: usize, available: usize },
    #[error("ZeroK: k must be positive")]
    ZeroK,
    #[error(
        "InvalidLabel: sample {sample} refers to class {class} but only {n_leaves} leaves exist"
    )]
    InvalidLabel {
        sample: usize,
        class: usize,
        n_leaves: usize,
    },
    #[error("InvalidRanking: row {row} repeats class {class}")]
    InvalidRanking { row: usize, class: usize },
    #[error(transparent)]
    Score(ScoreError),
}

impl From<ScoreError> for MetricError {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::KTooLarge { k, n_classes } => MetricError::KTooLarge {
                k,
                available: n_classes,
            },
            ScoreError::ZeroK => MetricError::ZeroK,
            other => MetricError::Score(other),
        }
    }
}

/// Ground-truth fine-class columns, one per sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector(Vec<usize>);

impl LabelVector {
    pub fn new(labels: Vec<usize>, n_leaves: usize) -> Result<Self, MetricError> {
        if labels.is_empty() {
            return Err(MetricError::EmptyInput);
        }
        check_range(&labels, n_leaves)?;
        Ok(Self(labels))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_range(values: &[usize], n_leaves: usize) -> Result<(), MetricError> {
    match values.iter().position(|&v| v >= n_leaves) {
        Some(sample) => Err(MetricError::InvalidLabel {
            sample,
            class: values[sample],
            n_leaves,
        }),
        None => Ok(()),
    }
}

fn check_lengths(pred: usize, gt: &LabelVector) -> Result<(), MetricError> {
    if pred != gt.len() {
        return Err(MetricError::LengthMismatch {
            predictions: pred,
            labels: gt.len(),
        });
    }
    if pred == 0 {
        return Err(MetricError::EmptyInput);
    }
    Ok(())
}

pub fn top1_accuracy(pred: &[usize], gt: &LabelVector) -> Result<f64, MetricError> {
    check_lengths(pred.len(), gt)?;
    let correct = pred
        .iter()
        .zip(gt.as_slice())
        .filter(|(p, g)| p == g)
        .count();
    Ok(correct as f64 / pred.len() as f64)
}

/// Mean LCA height over misclassified samples; `None` when nothing is wrong.
pub fn avg_mistake_severity(
    pred: &[usize],
    gt: &LabelVector,
    t: &Taxonomy,
) -> Result<Option<f64>, MetricError> {
    check_lengths(pred.len(), gt)?;
    check_range(pred, t.leaf_count())?;
    let (mut total, mut mistakes) = (0u64, 0u64);
    for (&p, &g) in pred.iter().zip(gt.as_slice()) {
        if p != g {
            total += t.leaf_lca_height(p, g) as u64;
            mistakes += 1;
        }
    }
    Ok((mistakes > 0).then(|| total as f64 / mistakes as f64))
}

fn check_ranking(ranking: &Ranking, n_leaves: usize) -> Result<(), MetricError> {
    for (row, r) in ranking.rows().enumerate() {
        check_range(r, n_leaves)?;
        for (a, &x) in r.iter().enumerate() {
            if r[..a].contains(&x) {
                return Err(MetricError::InvalidRanking { row, class: x });
            }
        }
    }
    Ok(())
}

fn hier_dist_unchecked(ranking: &Ranking, gt: &LabelVector, t: &Taxonomy, k: usize) -> f64 {
    let total: u64 = ranking
        .rows()
        .zip(gt.as_slice())
        .map(|(r, &g)| {
            r[..k]
                .iter()
                .map(|&c| t.leaf_lca_height(c, g) as u64)
                .sum::<u64>()
        })
        .sum();
    total as f64 / (k as u64 * gt.len() as u64) as f64
}

/// Mean over samples of the mean LCA height between the ground truth and each
/// of the first `k` ranked classes.
pub fn hier_dist_at_k(
    ranking: &Ranking,
    gt: &LabelVector,
    t: &Taxonomy,
    k: usize,
) -> Result<f64, MetricError> {
    if k == 0 {
        return Err(MetricError::ZeroK);
    }
    check_lengths(ranking.n_samples(), gt)?;
    if k > ranking.width() {
        return Err(MetricError::KTooLarge {
            k,
            available: ranking.width(),
        });
    }
    check_ranking(ranking, t.leaf_count())?;
    Ok(hier_dist_unchecked(ranking, gt, t, k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub n_samples: usize,
    pub n_mistakes: usize,
    pub top1_accuracy: f64,
    pub avg_mistake_severity: Option<f64>,
    pub hier_dist_at_k: BTreeMap<usize, f64>,
}

impl EvalReport {
    pub fn top1_error(&self) -> f64 {
        1.0 - self.top1_accuracy
    }
}

/// What to evaluate: raw scores (ranked by descending value) or a ready ranking.
#[derive(Debug, Clone, Copy)]
pub enum EvalInput<'a> {
    Scores(&'a ScoreMatrix),
    Ranking(&'a Ranking),
}

pub fn eval_report(
    input: EvalInput<'_>,
    gt: &LabelVector,
    t: &Taxonomy,
    ks: &[usize],
    method: &str,
) -> Result<EvalReport, MetricError> {
    if ks.contains(&0) {
        return Err(MetricError::ZeroK);
    }
    let width = ks.iter().copied().max().unwrap_or(1);
    let owned;
    let ranking = match input {
        EvalInput::Scores(m) => {
            if m.n_classes() != t.leaf_count() {
                return Err(MetricError::Score(ScoreError::ClassNameCount {
                    n_classes: t.leaf_count(),
                    names: m.n_classes(),
                }));
            }
            owned = top_k(m, width)?;
            &owned
        }
        EvalInput::Ranking(r) => r,
    };
    check_lengths(ranking.n_samples(), gt)?;
    if width > ranking.width() {
        return Err(MetricError::KTooLarge {
            k: width,
            available: ranking.width(),
        });
    }
    check_ranking(ranking, t.leaf_count())?;

    let pred = ranking.top1();
    let n_mistakes = pred
        .iter()
        .zip(gt.as_slice())
        .filter(|(p, g)| p != g)
        .count();
    let hier_dist_at_k = ks
        .iter()
        .map(|&k| (k, hier_dist_unchecked(ranking, gt, t, k)))
        .collect();
    Ok(EvalReport {
        method: method.to_string(),
        n_samples: gt.len(),
        n_mistakes,
        top1_accuracy: top1_accuracy(&pred, gt)?,
        avg_mistake_severity: avg_mistake_severity(&pred, gt, t)?,
        hier_dist_at_k,
    })
}
