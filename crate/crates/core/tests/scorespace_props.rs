mod common;

use hierens::scorespace::{softmax_rows, top_k, validate_probabilities, ScoreKind, ScoreMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn logits(rows: &[Vec<f64>]) -> ScoreMatrix {
    ScoreMatrix::from_rows(rows, ScoreKind::Logits).unwrap()
}

/// Double-double arithmetic: just enough for an exp oracle good to ~1e-30.
#[derive(Clone, Copy)]
struct Dd(f64, f64);

impl Dd {
    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd(s, (a - (s - bb)) + (b - bb))
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.0, o.0);
        let e = s.1 + self.1 + o.1;
        Dd::two_sum(s.0, e)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.0 * o.0;
        let e = self.0.mul_add(o.0, -p) + self.0 * o.1 + self.1 * o.0;
        Dd::two_sum(p, e)
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.0 / o.0;
        let r = self.add(o.mul(Dd(-q1, 0.0)));
        let q2 = r.0 / o.0;
        let r = r.add(o.mul(Dd(-q2, 0.0)));
        let q3 = r.0 / o.0;
        Dd::two_sum(q1, q2).add(Dd(q3, 0.0))
    }

    /// Taylor series; fine for |x| ≤ 3.
    fn exp(x: f64) -> Dd {
        let x = Dd(x, 0.0);
        let mut term = Dd(1.0, 0.0);
        let mut sum = Dd(1.0, 0.0);
        for n in 1..60 {
            term = term.mul(x).div(Dd(n as f64, 0.0));
            sum = sum.add(term);
        }
        sum
    }
}

#[test]
fn softmax_matches_extended_precision_oracle() {
    let v = [1.0, 2.0, 3.0];
    let p = softmax_rows(&logits(&[v.to_vec()])).unwrap();
    let e: Vec<Dd> = v.iter().map(|&x| Dd::exp(x - 3.0)).collect();
    let total = e[0].add(e[1]).add(e[2]);
    for (i, ei) in e.iter().enumerate() {
        let want = ei.div(total).0;
        let got = p.get(0, i);
        assert!(
            ((got - want) / want).abs() < 1e-12,
            "class {i}: {got} vs {want}"
        );
    }
}

proptest! {
    #[test]
    fn softmax_is_shift_invariant(
        row in proptest::collection::vec(-50.0f64..50.0, 1..20),
        c in -700.0f64..700.0,
    ) {
        let shifted: Vec<f64> = row.iter().map(|v| v + c).collect();
        let a = softmax_rows(&logits(&[row])).unwrap();
        let b = softmax_rows(&logits(&[shifted])).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn softmax_rows_sum_to_one(
        rows in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 8), 1..20),
    ) {
        let p = softmax_rows(&logits(&rows)).unwrap();
        for r in p.rows() {
            prop_assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(r.iter().all(|&v| v >= 0.0));
        }
        prop_assert!(validate_probabilities(&p, 1e-9).is_ok());
    }

    #[test]
    fn full_width_top_k_is_a_sorted_permutation(
        row in proptest::collection::vec(0u8..5, 1..30),
    ) {
        let row: Vec<f64> = row.into_iter().map(f64::from).collect();
        let m = logits(std::slice::from_ref(&row));
        let r = top_k(&m, row.len()).unwrap();
        let order = r.row(0);
        let mut seen = order.to_vec();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..row.len()).collect::<Vec<_>>());
        for w in order.windows(2) {
            let (a, b) = (w[0], w[1]);
            prop_assert!(row[a] > row[b] || (row[a] == row[b] && a < b));
        }
    }
}

#[test]
fn top1_agrees_with_linear_scan_including_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (n_rows, n_cols) = (10_000, 12);
    let mut values = Vec::with_capacity(n_rows * n_cols);
    for i in 0..n_rows {
        for _ in 0..n_cols {
            // Every third row draws from a tiny alphabet to force ties.
            let v = if i % 3 == 0 {
                f64::from(rng.random_range(0u8..3))
            } else {
                rng.random::<f64>()
            };
            values.push(v);
        }
    }
    let names = (0..n_cols).map(|j| format!("c{j}")).collect();
    let m = ScoreMatrix::new(n_rows, n_cols, values, ScoreKind::Logits, names).unwrap();
    let r = top_k(&m, 1).unwrap();
    let mut tied_rows = 0;
    for i in 0..n_rows {
        let row = m.row(i);
        let mut best = 0;
        for j in 1..n_cols {
            if row[j] > row[best] {
                best = j;
            }
        }
        if row.iter().filter(|&&v| v == row[best]).count() > 1 {
            tied_rows += 1;
        }
        assert_eq!(r.row(i), &[best], "row {i}");
    }
    assert!(tied_rows > 1000);
}
