//! Conditional risk minimization over fine-class probabilities.
//!
//! The risk of predicting class `i` is the expected cost `sum_j C[i][j] * p_j`.
//! Classes are ranked by ascending risk; the first entry is the prediction.

use rayon::prelude::*;
use thiserror::Error;

use crate::ensemble::{hie_combine, EnsembleError};
use crate::scorespace::{
    validate_probabilities, Ranking, ScoreError, ScoreKind, ScoreMatrix, EXTERNAL_PROB_TOL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("InvalidCostMatrix: {0}")]
    InvalidCostMatrix(String),
}

/// Square matrix of non-negative integer costs: symmetric, zero diagonal and
/// at least 1 off the diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostMatrix {
    side: usize,
    values: Vec<u32>,
}

impl CostMatrix {
    pub fn new(side: usize, values: Vec<u32>) -> Result<Self, RiskError> {
        if side == 0 || values.len() != side * side {
            return Err(RiskError::InvalidCostMatrix(format!(
                "{} values do not form a non-empty {side}x{side} matrix",
                values.len()
            )));
        }
        for i in 0..side {
            if values[i * side + i] != 0 {
                return Err(RiskError::InvalidCostMatrix(format!(
                    "diagonal entry {i} is not zero"
                )));
            }
            for j in (i + 1)..side {
                let (a, b) = (values[i * side + j], values[j * side + i]);
                if a != b {
                    return Err(RiskError::InvalidCostMatrix(format!(
                        "entries ({i},{j})={a} and ({j},{i})={b} differ"
                    )));
                }
                if a == 0 {
                    return Err(RiskError::InvalidCostMatrix(format!(
                        "off-diagonal entry ({i},{j}) is zero"
                    )));
                }
            }
        }
        Ok(Self { side, values })
    }

    /// 0/1 loss.
    pub fn zero_one(side: usize) -> Self {
        let values = (0..side * side)
            .map(|k| u32::from(k / side != k % side))
            .collect();
        Self { side, values }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.values[i * self.side + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.values[i * self.side..(i + 1) * self.side]
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }
}

/// Full ascending-risk ordering of every class, per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskRanking {
    pub ranking: Ranking,
    /// Risks aligned with `ranking`, so each row is non-decreasing.
    pub risks: Vec<f64>,
}

impl RiskRanking {
    pub fn predictions(&self) -> Vec<usize> {
        self.ranking.top1()
    }

    pub fn risk_row(&self, i: usize) -> &[f64] {
        let w = self.ranking.width();
        &self.risks[i * w..(i + 1) * w]
    }
}

/// Expected cost of predicting each class for one probability row.
pub fn expected_costs(p: &[f64], costs: &CostMatrix) -> Vec<f64> {
    (0..costs.side())
        .map(|i| {
            costs
                .row(i)
                .iter()
                .zip(p)
                .map(|(&c, &pj)| f64::from(c) * pj)
                .sum()
        })
        .collect()
}

/// Ranks classes by ascending expected cost, lowest index first on ties.
pub fn crm_rerank(probs: &ScoreMatrix, costs: &CostMatrix) -> Result<RiskRanking, RiskError> {
    if probs.kind() != ScoreKind::Probabilities {
        return Err(ScoreError::WrongKind {
            expected: ScoreKind::Probabilities,
            found: probs.kind(),
        }
        .into());
    }
    validate_probabilities(probs, EXTERNAL_PROB_TOL)?;
    let n = probs.n_classes();
    if costs.side() != n {
        return Err(RiskError::DimensionMismatch(format!(
            "cost matrix is {0}x{0} but scores have {n} classes",
            costs.side()
        )));
    }
    let mut order = vec![0usize; probs.values().len()];
    let mut risks = vec![0.0f64; probs.values().len()];
    order
        .par_chunks_mut(n)
        .zip(risks.par_chunks_mut(n))
        .zip(probs.values().par_chunks(n))
        .for_each(|((order_row, risk_row), p)| {
            let r = expected_costs(p, costs);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| r[a].total_cmp(&r[b]).then(a.cmp(&b)));
            for (k, &i) in idx.iter().enumerate() {
                order_row[k] = i;
                risk_row[k] = r[i];
            }
        });
    Ok(RiskRanking {
        ranking: Ranking::new(probs.n_samples(), n, order)?,
        risks,
    })
}

/// Hierarchical ensemble followed by risk reranking.
pub fn hie_then_crm(
    fine: &ScoreMatrix,
    coarse: &ScoreMatrix,
    pmap: &[usize],
    costs: &CostMatrix,
) -> Result<RiskRanking, RiskError> {
    let combined = hie_combine(fine, coarse, pmap)?;
    crm_rerank(&combined.scores, costs)
}
