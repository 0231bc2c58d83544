#![allow(dead_code)]

use std::collections::BTreeSet;

use hierens::scorespace::{ScoreKind, ScoreMatrix};
use hierens::taxonomy::{build_taxonomy, Taxonomy};
use proptest::prelude::*;
use rand::Rng;

pub fn node(i: usize) -> String {
    format!("v{i}")
}

/// `parents[i - 1]` is the parent of node `i`; node 0 is the root.
pub fn tree_from_parents(parents: &[usize]) -> Taxonomy {
    let edges: Vec<(String, String)> = parents
        .iter()
        .enumerate()
        .map(|(i, &p)| (node(i + 1), node(p)))
        .collect();
    build_taxonomy(&edges).unwrap()
}

/// Random recursive trees: each new node attaches to an earlier one.
pub fn parents_strategy(max_nodes: usize) -> impl Strategy<Value = Vec<usize>> {
    (2..=max_nodes).prop_flat_map(|n| {
        proptest::collection::vec(any::<u32>(), n - 1).prop_map(|raw| {
            raw.iter()
                .enumerate()
                .map(|(i, &r)| r as usize % (i + 1))
                .collect()
        })
    })
}

pub fn random_parents<R: Rng>(rng: &mut R, n_nodes: usize) -> Vec<usize> {
    (1..n_nodes).map(|i| rng.random_range(0..i)).collect()
}

/// A random tree with between 2 and `max_leaves` leaves.
pub fn random_tree<R: Rng>(rng: &mut R, max_leaves: usize) -> Taxonomy {
    loop {
        let n = rng.random_range(2..=2 * max_leaves);
        let t = tree_from_parents(&random_parents(rng, n));
        if (2..=max_leaves).contains(&t.leaf_count()) {
            return t;
        }
    }
}

/// Strictly positive probability row with a wide dynamic range.
pub fn random_prob_row<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let spread = rng.random_range(0.1..6.0);
    let raw: Vec<f64> = (0..n)
        .map(|_| (spread * rng.random_range(-1.0..1.0f64)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

pub fn probs(rows: &[Vec<f64>]) -> ScoreMatrix {
    ScoreMatrix::from_rows(rows, ScoreKind::Probabilities).unwrap()
}

pub fn unique_argmax(row: &[f64]) -> Option<usize> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let hits: Vec<usize> = (0..row.len()).filter(|&i| row[i] == max).collect();
    (hits.len() == 1).then(|| hits[0])
}

/// Ancestors of `n` from itself up to the root, by plain parent walking.
pub fn ancestors(t: &Taxonomy, name: &str) -> Vec<String> {
    let mut out = vec![name.to_string()];
    let mut cur = t.id_of(name).unwrap();
    while let Some(p) = t.parent_of(cur).unwrap() {
        out.push(t.name(p).to_string());
        cur = p;
    }
    out
}

/// Longest downward path to a leaf, by recursion over the edge list.
pub fn brute_height(t: &Taxonomy, name: &str) -> usize {
    let edges = t.edges();
    edges
        .iter()
        .filter(|(_, p)| p == name)
        .map(|(c, _)| 1 + brute_height(t, c))
        .max()
        .unwrap_or(0)
}

/// LCA height via ancestor-set intersection: the deepest shared ancestor is
/// the one with the longest ancestor chain.
pub fn brute_lca_height(t: &Taxonomy, a: &str, b: &str) -> usize {
    let aa = ancestors(t, a);
    let bb: BTreeSet<String> = ancestors(t, b).into_iter().collect();
    let lca = aa
        .iter()
        .filter(|n| bb.contains(*n))
        .max_by_key(|n| ancestors(t, n).len())
        .unwrap();
    brute_height(t, lca)
}
