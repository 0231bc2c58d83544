//! Hierarchical ensembles of per-level classifiers.
//!
//! Each fine-class probability is multiplied by the probability its ancestor
//! received from an independent coarser classifier, then the row is
//! renormalized:
//!
//! ```text
//! u_i = q_i * r_parent(i)        s_i = u_i / sum_j u_j
//! ```
//!
//! The decision rule is the argmax of `s`. Cascades multiply in one factor per
//! upper level. When a product underflows [`UNDERFLOW_THRESHOLD`] the row is
//! evaluated in log space instead.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scorespace::{
    validate_probabilities, ScoreError, ScoreKind, ScoreMatrix, EXTERNAL_PROB_TOL,
};
use crate::taxonomy::{Taxonomy, TaxonomyError};

/// Products below this switch the row to log-domain accumulation.
pub const UNDERFLOW_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("ZeroDenominator: every combined score in row {row} is zero")]
    ZeroDenominator { row: usize },
    #[error("InvalidIndex: {0}")]
    InvalidIndex(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombineMethod {
    Hie,
    HieSelf,
    Cascade,
}

/// Which upper level contributed a factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// The parents of the leaves, whatever their depth.
    Parent,
    /// All nodes at a fixed depth of a leveled tree.
    Depth(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: CombineMethod,
    pub levels_used: Vec<Level>,
}

/// Renormalized fine-class probabilities with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedScores {
    pub scores: ScoreMatrix,
    pub provenance: Provenance,
}

/// One upper level of a cascade: its probabilities and, for every fine column,
/// the column of that leaf's ancestor.
#[derive(Debug, Clone, Copy)]
pub struct UpperLevel<'a> {
    pub level: Level,
    pub scores: &'a ScoreMatrix,
    pub ancestor_map: &'a [usize],
}

fn require_probabilities(m: &ScoreMatrix) -> Result<(), EnsembleError> {
    if m.kind() != ScoreKind::Probabilities {
        return Err(ScoreError::WrongKind {
            expected: ScoreKind::Probabilities,
            found: m.kind(),
        }
        .into());
    }
    validate_probabilities(m, EXTERNAL_PROB_TOL)?;
    Ok(())
}

fn check_upper(fine: &ScoreMatrix, up: &UpperLevel<'_>) -> Result<(), EnsembleError> {
    require_probabilities(up.scores)?;
    if up.scores.n_samples() != fine.n_samples() {
        return Err(EnsembleError::DimensionMismatch(format!(
            "fine scores have {} rows but {:?} scores have {}",
            fine.n_samples(),
            up.level,
            up.scores.n_samples()
        )));
    }
    if up.ancestor_map.len() != fine.n_classes() {
        return Err(EnsembleError::DimensionMismatch(format!(
            "ancestor map has {} entries for {} fine classes",
            up.ancestor_map.len(),
            fine.n_classes()
        )));
    }
    if let Some(&bad) = up
        .ancestor_map
        .iter()
        .find(|&&j| j >= up.scores.n_classes())
    {
        return Err(EnsembleError::DimensionMismatch(format!(
            "ancestor map points at column {bad} of a {}-column matrix",
            up.scores.n_classes()
        )));
    }
    Ok(())
}

/// Direct evaluation: products, then one division by their sum.
///
/// Returns `false` without normalizing if any product falls below
/// [`UNDERFLOW_THRESHOLD`].
pub fn combine_row_direct(q: &[f64], factors: &[(&[f64], &[usize])], out: &mut [f64]) -> bool {
    let mut underflow = false;
    for (i, o) in out.iter_mut().enumerate() {
        let mut u = q[i];
        for (r, map) in factors {
            u *= r[map[i]];
        }
        underflow |= u < UNDERFLOW_THRESHOLD;
        *o = u;
    }
    if underflow {
        return false;
    }
    let sum: f64 = out.iter().sum();
    for o in out.iter_mut() {
        *o /= sum;
    }
    true
}

/// Log-domain evaluation with a max shift and compensated summation.
///
/// Returns `false` if every product is exactly zero.
pub fn combine_row_log(q: &[f64], factors: &[(&[f64], &[usize])], out: &mut [f64]) -> bool {
    let mut max = f64::NEG_INFINITY;
    for (i, o) in out.iter_mut().enumerate() {
        let mut l = q[i].ln();
        for (r, map) in factors {
            l += r[map[i]].ln();
        }
        // ln of a non-positive probability: treat as an exact zero.
        if l.is_nan() {
            l = f64::NEG_INFINITY;
        }
        max = max.max(l);
        *o = l;
    }
    if max == f64::NEG_INFINITY {
        return false;
    }
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        let t = sum + *o;
        if sum.abs() >= o.abs() {
            comp += (sum - t) + *o;
        } else {
            comp += (*o - t) + sum;
        }
        sum = t;
    }
    let total = sum + comp;
    for o in out.iter_mut() {
        *o /= total;
    }
    true
}

fn combine_row(q: &[f64], factors: &[(&[f64], &[usize])], out: &mut [f64]) -> bool {
    combine_row_direct(q, factors, out) || combine_row_log(q, factors, out)
}

fn combine(
    fine: &ScoreMatrix,
    uppers: &[UpperLevel<'_>],
    provenance: Provenance,
) -> Result<CombinedScores, EnsembleError> {
    require_probabilities(fine)?;
    for up in uppers {
        check_upper(fine, up)?;
    }
    let n = fine.n_classes();
    let mut values = vec![0.0; fine.values().len()];
    let ok: Vec<bool> = values
        .par_chunks_mut(n)
        .enumerate()
        .map(|(row, out)| {
            let factors: Vec<(&[f64], &[usize])> = uppers
                .iter()
                .map(|up| (up.scores.row(row), up.ancestor_map))
                .collect();
            combine_row(fine.row(row), &factors, out)
        })
        .collect();
    if let Some(row) = ok.iter().position(|&good| !good) {
        return Err(EnsembleError::ZeroDenominator { row });
    }
    Ok(CombinedScores {
        scores: ScoreMatrix::from_parts(
            fine.n_samples(),
            n,
            values,
            ScoreKind::Probabilities,
            fine.class_names().to_vec(),
        ),
        provenance,
    })
}

/// Two-level hierarchical ensemble of fine and parent-level probabilities.
pub fn hie_combine(
    fine: &ScoreMatrix,
    coarse: &ScoreMatrix,
    pmap: &[usize],
) -> Result<CombinedScores, EnsembleError> {
    combine(
        fine,
        &[UpperLevel {
            level: Level::Parent,
            scores: coarse,
            ancestor_map: pmap,
        }],
        Provenance {
            method: CombineMethod::Hie,
            levels_used: vec![Level::Parent],
        },
    )
}

/// Sums fine probabilities within each parent. Columns are named `p0, p1, ...`;
/// rebind them with [`ScoreMatrix::with_class_names`] when needed.
pub fn marginalize_to_parents(
    fine: &ScoreMatrix,
    pmap: &[usize],
    n_coarse: usize,
) -> Result<ScoreMatrix, EnsembleError> {
    require_probabilities(fine)?;
    if pmap.len() != fine.n_classes() {
        return Err(EnsembleError::DimensionMismatch(format!(
            "parent map has {} entries for {} fine classes",
            pmap.len(),
            fine.n_classes()
        )));
    }
    if let Some(&bad) = pmap.iter().find(|&&j| j >= n_coarse) {
        return Err(EnsembleError::DimensionMismatch(format!(
            "parent map points at coarse column {bad} but only {n_coarse} exist"
        )));
    }
    let mut values = vec![0.0; fine.n_samples() * n_coarse];
    values
        .par_chunks_mut(n_coarse)
        .zip(fine.values().par_chunks(fine.n_classes()))
        .for_each(|(out, q)| {
            for (i, &p) in q.iter().enumerate() {
                out[pmap[i]] += p;
            }
        });
    Ok(ScoreMatrix::from_parts(
        fine.n_samples(),
        n_coarse,
        values,
        ScoreKind::Probabilities,
        (0..n_coarse).map(|j| format!("p{j}")).collect(),
    ))
}

/// Hierarchical ensemble of a single classifier with its own parent marginals.
pub fn hie_self(
    fine: &ScoreMatrix,
    pmap: &[usize],
    n_coarse: usize,
) -> Result<CombinedScores, EnsembleError> {
    let marginals = marginalize_to_parents(fine, pmap, n_coarse)?;
    let mut out = hie_combine(fine, &marginals, pmap)?;
    out.provenance.method = CombineMethod::HieSelf;
    Ok(out)
}

/// Multiplies in one factor per upper level, top-down. An empty `uppers`
/// returns the fine probabilities unchanged.
pub fn cascade_combine(
    fine: &ScoreMatrix,
    uppers: &[UpperLevel<'_>],
) -> Result<CombinedScores, EnsembleError> {
    let provenance = Provenance {
        method: CombineMethod::Cascade,
        levels_used: uppers.iter().map(|u| u.level).collect(),
    };
    if uppers.is_empty() {
        require_probabilities(fine)?;
        return Ok(CombinedScores {
            scores: fine.clone(),
            provenance,
        });
    }
    combine(fine, uppers, provenance)
}

/// Builds ancestor maps from a leveled taxonomy and runs the cascade.
/// `levels` pairs a depth with the probabilities of that depth, columns in
/// [`Taxonomy::level_order`].
pub fn cascade_by_depth(
    taxonomy: &Taxonomy,
    fine: &ScoreMatrix,
    levels: &[(usize, &ScoreMatrix)],
) -> Result<CombinedScores, EnsembleError> {
    let maps = levels
        .iter()
        .map(|&(d, _)| taxonomy.ancestor_index_map(d))
        .collect::<Result<Vec<_>, _>>()?;
    let uppers: Vec<UpperLevel<'_>> = levels
        .iter()
        .zip(&maps)
        .map(|(&(d, scores), map)| UpperLevel {
            level: Level::Depth(d),
            scores,
            ancestor_map: map,
        })
        .collect();
    cascade_combine(fine, &uppers)
}

/// Ratio `s_g / q_g` for one sample. At least 1 whenever the coarse argmax is
/// the parent of `g`; 1 by convention when `q_g = 0`.
pub fn true_class_margin(
    q: &[f64],
    r: &[f64],
    pmap: &[usize],
    g: usize,
) -> Result<f64, EnsembleError> {
    if g >= q.len() {
        return Err(EnsembleError::InvalidIndex(format!(
            "goal class {g} out of range for {} fine classes",
            q.len()
        )));
    }
    if pmap.len() != q.len() {
        return Err(EnsembleError::InvalidIndex(format!(
            "parent map has {} entries for {} fine classes",
            pmap.len(),
            q.len()
        )));
    }
    if let Some(&bad) = pmap.iter().find(|&&j| j >= r.len()) {
        return Err(EnsembleError::InvalidIndex(format!(
            "parent map points at coarse column {bad} of {}",
            r.len()
        )));
    }
    if q[g] == 0.0 {
        return Ok(1.0);
    }
    let mut s = vec![0.0; q.len()];
    if !combine_row(q, &[(r, pmap)], &mut s) {
        return Err(EnsembleError::ZeroDenominator { row: 0 });
    }
    Ok(s[g] / q[g])
}
