#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use hierens::scorespace::{ScoreKind, ScoreMatrix};
use hierens::taxonomy::{build_taxonomy, Taxonomy};
use rand::Rng;

pub const FLIP_HIERARCHY: &str = r#"{
  "nodes": [
    {"name": "entity", "parent": null},
    {"name": "flower", "parent": "entity"},
    {"name": "vehicle", "parent": "entity"},
    {"name": "rose", "parent": "flower"},
    {"name": "tulip", "parent": "flower"},
    {"name": "bus", "parent": "vehicle"},
    {"name": "car", "parent": "vehicle"}
  ],
  "leaf_order": ["rose", "tulip", "bus", "car"]
}
"#;

pub const FLIP_FINE: &str = "#kind=probabilities\nrose,tulip,bus,car\n0.40,0.10,0.35,0.15\n";
pub const FLIP_COARSE: &str = "#kind=probabilities\nflower,vehicle\n0.2,0.8\n";

/// Writes the rose/tulip/bus/car fixture into `dir` with ground truth `bus`.
pub fn write_flip_fixture(dir: &Path) {
    std::fs::write(dir.join("hierarchy.json"), FLIP_HIERARCHY).unwrap();
    std::fs::write(dir.join("fine.csv"), FLIP_FINE).unwrap();
    std::fs::write(dir.join("coarse.csv"), FLIP_COARSE).unwrap();
    std::fs::write(dir.join("labels.txt"), "bus\n").unwrap();
}

pub fn hierens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hierens"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Random tree with between 2 and `max_leaves` leaves; each new node attaches
/// to an earlier one.
pub fn random_tree<R: Rng>(rng: &mut R, max_leaves: usize) -> Taxonomy {
    loop {
        let n = rng.random_range(3..=2 * max_leaves);
        let edges: Vec<(String, String)> = (1..n)
            .map(|i| (format!("v{i}"), format!("v{}", rng.random_range(0..i))))
            .collect();
        let t = build_taxonomy(&edges).unwrap();
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

fn ancestors(t: &Taxonomy, name: &str) -> Vec<String> {
    let mut out = vec![name.to_string()];
    let mut cur = t.id_of(name).unwrap();
    while let Some(p) = t.parent_of(cur).unwrap() {
        out.push(t.name(p).to_string());
        cur = p;
    }
    out
}

fn brute_height(t: &Taxonomy, name: &str) -> usize {
    t.edges()
        .iter()
        .filter(|(_, p)| p == name)
        .map(|(c, _)| 1 + brute_height(t, c))
        .max()
        .unwrap_or(0)
}

/// Leaf × leaf LCA heights via ancestor-set intersection.
pub fn brute_height_table(t: &Taxonomy) -> Vec<Vec<usize>> {
    let names = t.leaf_names();
    names
        .iter()
        .map(|a| {
            let aa = ancestors(t, a);
            names
                .iter()
                .map(|b| {
                    let bb: BTreeSet<String> = ancestors(t, b).into_iter().collect();
                    let lca = aa.iter().find(|n| bb.contains(*n)).unwrap();
                    brute_height(t, lca)
                })
                .collect()
        })
        .collect()
}
