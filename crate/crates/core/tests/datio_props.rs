mod common;

use common::*;
use hierens::datio::{
    align_columns, format_scores_text, load_hierarchy, load_scores, parse_scores_text,
    write_hierarchy, write_scores, AlignLevel,
};
use hierens::scorespace::{ScoreKind, ScoreMatrix};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ScoreMatrix {
    let values = (0..rows * cols)
        .map(|_| rng.random_range(-1e3..1e3f64) * 10f64.powi(rng.random_range(-30..30)))
        .collect();
    let names = (0..cols).map(|j| format!("class_{j}")).collect();
    ScoreMatrix::new(rows, cols, values, ScoreKind::Logits, names).unwrap()
}

#[test]
fn binary_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.hies");
    let m = random_matrix(&mut ChaCha8Rng::seed_from_u64(7), 2_000, 101);
    write_scores(&m, &path).unwrap();
    let back = load_scores(&path, None).unwrap();
    assert_eq!(back.class_names(), m.class_names());
    assert_eq!(back.kind(), ScoreKind::Logits);
    let bits = |x: &ScoreMatrix| x.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&m));
}

#[test]
fn hierarchy_file_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..50 {
        let t = random_tree(&mut rng, 60);
        let path = dir.path().join(format!("h{i}.json"));
        write_hierarchy(&t, &path).unwrap();
        let back = load_hierarchy(&path).unwrap();
        assert_eq!(back.parent_map(), t.parent_map());
        assert_eq!(back, t);
    }
}

proptest! {
    #[test]
    fn text_round_trip_is_value_exact(
        rows in proptest::collection::vec(proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3), 1..20),
    ) {
        let m = ScoreMatrix::from_rows(&rows, ScoreKind::Logits).unwrap();
        let text = format_scores_text(&m, true);
        let back = parse_scores_text(&text, None, Path::new("mem")).unwrap();
        let bits = |x: &ScoreMatrix| x.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&m));
        prop_assert_eq!(back.class_names(), m.class_names());
    }

    #[test]
    fn align_is_idempotent_and_name_preserving(parents in parents_strategy(60), seed in any::<u64>()) {
        let t = tree_from_parents(&parents);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut names = t.leaf_names();
        names.shuffle(&mut rng);
        let rows: Vec<Vec<f64>> = (0..3).map(|_| (0..names.len()).map(|_| rng.random()).collect()).collect();
        let m = ScoreMatrix::from_rows_named(&rows, ScoreKind::Logits, names.clone()).unwrap();
        let once = align_columns(&m, &t, AlignLevel::Leaf).unwrap();
        let twice = align_columns(&once, &t, AlignLevel::Leaf).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once.class_names(), &t.leaf_names()[..]);
        for (j, name) in names.iter().enumerate() {
            let k = once.class_names().iter().position(|n| n == name).unwrap();
            for r in 0..3 {
                prop_assert_eq!(once.get(r, k), m.get(r, j));
            }
        }
        let coarse = ScoreMatrix::from_rows_named(
            &[vec![0.0; t.coarse_count()]],
            ScoreKind::Logits,
            t.coarse_names(),
        ).unwrap();
        prop_assert_eq!(&align_columns(&coarse, &t, AlignLevel::Coarse).unwrap(), &coarse);
    }
}
