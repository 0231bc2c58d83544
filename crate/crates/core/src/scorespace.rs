//! Per-level score matrices: softmax, probability checks and top-k ranking.
//!
//! Row operations run in parallel over rows only; every row is reduced
//! sequentially, so results do not depend on the thread count.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used for matrices produced inside the toolkit.
pub const INTERNAL_PROB_TOL: f64 = 1e-9;
/// Tolerance used for probability files written by external exporters.
pub const EXTERNAL_PROB_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Logits,
    Probabilities,
}

impl ScoreKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreKind::Logits => "logits",
            ScoreKind::Probabilities => "probabilities",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("EmptyMatrix: a score matrix needs at least one row and one column")]
    EmptyMatrix,
    #[error("ShapeMismatch: {n_samples}x{n_classes} matrix given {len} values")]
    ShapeMismatch {
        n_samples: usize,
        n_classes: usize,
        len: usize,
    },
    #[error("ClassNameCount: {n_classes} columns but {names} class names")]
    ClassNameCount { n_classes: usize, names: usize },
    #[error("NonFiniteInput: value at row {row}, column {col} is not finite")]
    NonFiniteInput { row: usize, col: usize },
    #[error("WrongKind: expected {expected:?} scores, found {found:?}")]
    WrongKind {
        expected: ScoreKind,
        found: ScoreKind,
    },
    #[error("KTooLarge: k={k} exceeds the {n_classes} available classes")]
    KTooLarge { k: usize, n_classes: usize },
    #[error("ZeroK: k must be positive")]
    ZeroK,
    #[error("RowSumViolation: row {row} sums to {sum}")]
    RowSumViolation { row: usize, sum: f64 },
    #[error("NegativeEntry: row {row}, column {col} holds {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("EntryAboveOne: row {row}, column {col} holds {value}")]
    EntryAboveOne { row: usize, col: usize, value: f64 },
}

/// Row-major `n_samples × n_classes` matrix of scores at one hierarchy level.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    n_samples: usize,
    n_classes: usize,
    values: Vec<f64>,
    kind: ScoreKind,
    class_names: Vec<String>,
}

impl ScoreMatrix {
    /// Checks shape and finiteness. Probability rows are *not* checked here;
    /// use [`validate_probabilities`] with the tolerance that fits the source.
    pub fn new(
        n_samples: usize,
        n_classes: usize,
        values: Vec<f64>,
        kind: ScoreKind,
        class_names: Vec<String>,
    ) -> Result<Self, ScoreError> {
        if n_samples == 0 || n_classes == 0 {
            return Err(ScoreError::EmptyMatrix);
        }
        if values.len() != n_samples * n_classes {
            return Err(ScoreError::ShapeMismatch {
                n_samples,
                n_classes,
                len: values.len(),
            });
        }
        if class_names.len() != n_classes {
            return Err(ScoreError::ClassNameCount {
                n_classes,
                names: class_names.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(ScoreError::NonFiniteInput {
                row: pos / n_classes,
                col: pos % n_classes,
            });
        }
        Ok(Self {
            n_samples,
            n_classes,
            values,
            kind,
            class_names,
        })
    }

    /// Builds a matrix from rows, naming columns `c0, c1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], kind: ScoreKind) -> Result<Self, ScoreError> {
        let n_classes = rows.first().map_or(0, Vec::len);
        let names = (0..n_classes).map(|i| format!("c{i}")).collect();
        Self::from_rows_named(rows, kind, names)
    }

    pub fn from_rows_named(
        rows: &[Vec<f64>],
        kind: ScoreKind,
        class_names: Vec<String>,
    ) -> Result<Self, ScoreError> {
        let n_classes = class_names.len();
        let mut values = Vec::with_capacity(rows.len() * n_classes);
        for row in rows {
            if row.len() != n_classes {
                return Err(ScoreError::ShapeMismatch {
                    n_samples: rows.len(),
                    n_classes,
                    len: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), n_classes, values, kind, class_names)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_classes..(i + 1) * self.n_classes]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.n_classes)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_classes + col]
    }

    /// Returns the same matrix with a different column-name binding.
    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self, ScoreError> {
        if names.len() != self.n_classes {
            return Err(ScoreError::ClassNameCount {
                n_classes: self.n_classes,
                names: names.len(),
            });
        }
        self.class_names = names;
        Ok(self)
    }

    /// Trusted constructor for matrices produced by row-wise kernels.
    pub(crate) fn from_parts(
        n_samples: usize,
        n_classes: usize,
        values: Vec<f64>,
        kind: ScoreKind,
        class_names: Vec<String>,
    ) -> Self {
        debug_assert_eq!(values.len(), n_samples * n_classes);
        debug_assert_eq!(class_names.len(), n_classes);
        Self {
            n_samples,
            n_classes,
            values,
            kind,
            class_names,
        }
    }

    /// Softmax for logits; a copy for probabilities.
    pub fn to_probabilities(&self) -> Result<ScoreMatrix, ScoreError> {
        match self.kind {
            ScoreKind::Logits => softmax_rows(self),
            ScoreKind::Probabilities => Ok(self.clone()),
        }
    }
}

/// Row-wise numerically stable softmax of a logits matrix.
pub fn softmax_rows(m: &ScoreMatrix) -> Result<ScoreMatrix, ScoreError> {
    if m.kind != ScoreKind::Logits {
        return Err(ScoreError::WrongKind {
            expected: ScoreKind::Logits,
            found: m.kind,
        });
    }
    if let Some(pos) = m.values.iter().position(|v| !v.is_finite()) {
        return Err(ScoreError::NonFiniteInput {
            row: pos / m.n_classes,
            col: pos % m.n_classes,
        });
    }
    let mut out = m.values.clone();
    out.par_chunks_mut(m.n_classes).for_each(softmax_in_place);
    Ok(ScoreMatrix::from_parts(
        m.n_samples,
        m.n_classes,
        out,
        ScoreKind::Probabilities,
        m.class_names.clone(),
    ))
}

/// Softmax of one row, in place.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Checks row sums and entry ranges against `tol`.
pub fn validate_probabilities(m: &ScoreMatrix, tol: f64) -> Result<(), ScoreError> {
    for (row, values) in m.rows().enumerate() {
        for (col, &value) in values.iter().enumerate() {
            if value < -tol {
                return Err(ScoreError::NegativeEntry { row, col, value });
            }
            if value > 1.0 + tol {
                return Err(ScoreError::EntryAboveOne { row, col, value });
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(ScoreError::RowSumViolation { row, sum });
        }
    }
    Ok(())
}

/// `n_samples × width` matrix of class indices, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    n_samples: usize,
    width: usize,
    indices: Vec<usize>,
}

impl Ranking {
    pub fn new(n_samples: usize, width: usize, indices: Vec<usize>) -> Result<Self, ScoreError> {
        if indices.len() != n_samples * width {
            return Err(ScoreError::ShapeMismatch {
                n_samples,
                n_classes: width,
                len: indices.len(),
            });
        }
        Ok(Self {
            n_samples,
            width,
            indices,
        })
    }

    pub fn from_rows(rows: &[Vec<usize>]) -> Result<Self, ScoreError> {
        let width = rows.first().map_or(0, Vec::len);
        let mut indices = Vec::with_capacity(rows.len() * width);
        for r in rows {
            if r.len() != width {
                return Err(ScoreError::ShapeMismatch {
                    n_samples: rows.len(),
                    n_classes: width,
                    len: r.len(),
                });
            }
            indices.extend_from_slice(r);
        }
        Self::new(rows.len(), width, indices)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.indices[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, usize> {
        self.indices.chunks_exact(self.width.max(1))
    }

    /// First column.
    pub fn top1(&self) -> Vec<usize> {
        self.rows().map(|r| r[0]).collect()
    }

    /// Keeps the first `k` columns.
    pub fn truncate(&self, k: usize) -> Result<Ranking, ScoreError> {
        if k > self.width {
            return Err(ScoreError::KTooLarge {
                k,
                n_classes: self.width,
            });
        }
        let indices = self.rows().flat_map(|r| r[..k].iter().copied()).collect();
        Ranking::new(self.n_samples, k, indices)
    }
}

/// Descending by value, ascending index on ties.
fn by_value_desc(row: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| {
        row[b]
            .partial_cmp(&row[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    }
}

/// Indices of the `k` largest entries in one row.
pub fn top_k_row(row: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    let cmp = by_value_desc(row);
    if k < idx.len() {
        idx.select_nth_unstable_by(k, &cmp);
        idx.truncate(k);
    }
    idx.sort_by(&cmp);
    idx
}

/// Per-row indices of the `k` largest scores.
pub fn top_k(m: &ScoreMatrix, k: usize) -> Result<Ranking, ScoreError> {
    if k == 0 {
        return Err(ScoreError::ZeroK);
    }
    if k > m.n_classes {
        return Err(ScoreError::KTooLarge {
            k,
            n_classes: m.n_classes,
        });
    }
    let mut indices = vec![0usize; m.n_samples * k];
    indices
        .par_chunks_mut(k)
        .zip(m.values.par_chunks(m.n_classes))
        .for_each(|(out, row)| out.copy_from_slice(&top_k_row(row, k)));
    Ranking::new(m.n_samples, k, indices)
}

/// Per-row argmax with lowest-index tie-break.
pub fn argmax(m: &ScoreMatrix) -> Vec<usize> {
    m.rows().map(argmax_row).collect()
}

pub fn argmax_row(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}
