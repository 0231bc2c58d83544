//! Seeded synthetic taxonomies, labels and per-level classifier scores.
//!
//! Each level's classifier is emulated by one-hot logits of the true class at
//! that level (margin [`LOGIT_MARGIN`]) plus Gaussian noise of the level's
//! scale. Draw order is fixed: for every sample, the label first, then one
//! standard normal per class for each level from the top down. Noise is drawn
//! even at scale zero so the stream does not depend on the noise settings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::LabelVector;
use crate::scorespace::{ScoreKind, ScoreMatrix};
use crate::taxonomy::{build_taxonomy_with_orders, Taxonomy};

pub const LOGIT_MARGIN: f64 = 1.0;

/// Recorded alongside generated data so other implementations can replay it.
pub const RNG_ALGORITHM: &str =
    "ChaCha20Rng::seed_from_u64 (rand_chacha 0.9); labels: random_range(0..n_leaves) (rand 0.9); noise: StandardNormal ziggurat (rand_distr 0.5)";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Children per node at each level, top down. `[4, 8]` gives 4 coarse
    /// classes with 8 leaves each.
    pub branching: Vec<usize>,
    pub n_samples: usize,
    /// Logit noise scale per level, aligned with `branching`; the last entry
    /// is the fine classifier.
    pub noise: Vec<f64>,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.branching.is_empty() {
            return bad("branching needs at least one level".into());
        }
        if self.branching.len() != self.noise.len() {
            return bad(format!(
                "{} branching levels but {} noise scales",
                self.branching.len(),
                self.noise.len()
            ));
        }
        if self.branching.contains(&0) {
            return bad("branching factors must be positive".into());
        }
        if let Some(s) = self.noise.iter().find(|s| !s.is_finite() || **s < 0.0) {
            return bad(format!("noise scale {s} must be finite and non-negative"));
        }
        if self.n_samples == 0 {
            return bad("n_samples must be positive".into());
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.branching.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.branching.iter().product()
    }
}

pub fn node_name(level: usize, index: usize) -> String {
    format!("n{level}_{index}")
}

/// Complete tree with the given branching factors. Leaf and coarse orders
/// follow generation order rather than name order.
pub fn gen_taxonomy(cfg: &SynthConfig) -> Result<Taxonomy, SynthError> {
    cfg.validate()?;
    let mut edges = Vec::new();
    let mut width = 1;
    for (level, &b) in cfg.branching.iter().enumerate() {
        for j in 0..width * b {
            edges.push((node_name(level + 1, j), node_name(level, j / b)));
        }
        width *= b;
    }
    let depth = cfg.depth();
    let leaves: Vec<String> = (0..width).map(|j| node_name(depth, j)).collect();
    let coarse: Vec<String> = (0..width / cfg.branching[depth - 1])
        .map(|j| node_name(depth - 1, j))
        .collect();
    Ok(
        build_taxonomy_with_orders(&edges, Some(&leaves), Some(&coarse))
            .expect("generated trees are always valid"),
    )
}

/// One generated data set.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthInstance {
    pub taxonomy: Taxonomy,
    pub labels: LabelVector,
    /// Leaf-level logits.
    pub fine: ScoreMatrix,
    /// `(depth, logits)` for every depth strictly between root and leaves,
    /// top down. Columns follow [`Taxonomy::level_order`].
    pub uppers: Vec<(usize, ScoreMatrix)>,
}

impl SynthInstance {
    /// The parents-of-leaves level, when the tree has one below the root.
    pub fn coarse(&self) -> Option<&ScoreMatrix> {
        self.uppers.last().map(|(_, m)| m)
    }
}

pub fn gen_instance(cfg: &SynthConfig) -> Result<SynthInstance, SynthError> {
    let taxonomy = gen_taxonomy(cfg)?;
    let depth = cfg.depth();
    let n_leaves = taxonomy.leaf_count();

    // Per depth 1..=depth: column names and each leaf's column at that depth.
    let levels: Vec<(Vec<String>, Vec<usize>)> = (1..=depth)
        .map(|d| {
            let names = taxonomy
                .level_order(d)
                .into_iter()
                .map(|n| taxonomy.name(n).to_string())
                .collect();
            let map = taxonomy
                .ancestor_index_map(d)
                .expect("generated trees are leveled");
            (names, map)
        })
        .collect();

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut labels = Vec::with_capacity(cfg.n_samples);
    let mut values: Vec<Vec<f64>> = levels
        .iter()
        .map(|(names, _)| Vec::with_capacity(cfg.n_samples * names.len()))
        .collect();
    for _ in 0..cfg.n_samples {
        let leaf = rng.random_range(0..n_leaves);
        labels.push(leaf);
        for (l, (names, map)) in levels.iter().enumerate() {
            let truth = map[leaf];
            for c in 0..names.len() {
                let z: f64 = rng.sample(StandardNormal);
                let signal = if c == truth { LOGIT_MARGIN } else { 0.0 };
                values[l].push(signal + cfg.noise[l] * z);
            }
        }
    }

    let mut matrices: Vec<ScoreMatrix> = levels
        .into_iter()
        .zip(values)
        .map(|((names, _), v)| {
            ScoreMatrix::new(cfg.n_samples, names.len(), v, ScoreKind::Logits, names)
                .expect("generated logits are finite")
        })
        .collect();
    let fine = matrices.pop().expect("at least one level");
    let uppers = matrices
        .into_iter()
        .enumerate()
        .map(|(i, m)| (i + 1, m))
        .collect();
    Ok(SynthInstance {
        labels: LabelVector::new(labels, n_leaves).expect("labels drawn in range"),
        taxonomy,
        fine,
        uppers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(branching: &[usize], noise: &[f64], n: usize, seed: u64) -> SynthConfig {
        SynthConfig {
            branching: branching.to_vec(),
            n_samples: n,
            noise: noise.to_vec(),
            seed,
        }
    }

    #[test]
    fn taxonomy_shapes() {
        let t = gen_taxonomy(&cfg(&[2, 2], &[0.0, 0.0], 1, 0)).unwrap();
        assert_eq!(
            (t.node_count(), t.leaf_count(), t.coarse_count()),
            (7, 4, 2)
        );
        assert_eq!(t.name(t.root()), "n0_0");
        assert_eq!(t.leaf_names(), vec!["n2_0", "n2_1", "n2_2", "n2_3"]);
        assert_eq!(t.parent_index_map(), vec![0, 0, 1, 1]);

        let t = gen_taxonomy(&cfg(&[4, 8], &[1.0, 1.0], 1, 0)).unwrap();
        assert_eq!((t.leaf_count(), t.coarse_count()), (32, 4));
        assert_eq!(t.leaf_names()[10], "n2_10");

        let star = gen_taxonomy(&cfg(&[3], &[1.0], 1, 0)).unwrap();
        assert_eq!(
            (star.leaf_count(), star.coarse_count(), star.max_depth()),
            (3, 1, 1)
        );
    }

    #[test]
    fn config_validation() {
        assert!(cfg(&[], &[], 1, 0).validate().is_err());
        assert!(cfg(&[2, 2], &[1.0], 1, 0).validate().is_err());
        assert!(cfg(&[2, 0], &[1.0, 1.0], 1, 0).validate().is_err());
        assert!(cfg(&[2], &[-1.0], 1, 0).validate().is_err());
        assert!(cfg(&[2], &[1.0], 0, 0).validate().is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let c = cfg(&[3, 4], &[0.5, 2.0], 50, 7);
        let a = gen_instance(&c).unwrap();
        let b = gen_instance(&c).unwrap();
        assert_eq!(a, b);
        let bits = |m: &ScoreMatrix| m.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.fine), bits(&b.fine));
        let other = gen_instance(&SynthConfig { seed: 8, ..c }).unwrap();
        assert_ne!(a.fine, other.fine);
    }

    #[test]
    fn noiseless_logits_are_one_hot() {
        let inst = gen_instance(&cfg(&[2, 3], &[0.0, 0.0], 20, 1)).unwrap();
        let pmap = inst.taxonomy.parent_index_map();
        let coarse = inst.coarse().unwrap();
        for (i, &g) in inst.labels.as_slice().iter().enumerate() {
            let row = inst.fine.row(i);
            for (c, &v) in row.iter().enumerate() {
                assert_eq!(v, if c == g { 1.0 } else { 0.0 });
            }
            assert_eq!(coarse.get(i, pmap[g]), 1.0);
        }
        assert_eq!(inst.uppers.len(), 1);
        assert_eq!(inst.uppers[0].0, 1);
    }
}
