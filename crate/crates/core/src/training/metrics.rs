//! Precision@k and confusion-matrix evaluation.

use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// Class indices sorted by descending logit, lower index first on ties.
pub fn rank_classes(logits: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..logits.len()).collect();
    order.sort_by(|&a, &b| {
        logits[b]
            .partial_cmp(&logits[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Percentage of examples whose true label appears in the top `k` of its
/// ranked class list, for each requested `k`.
pub fn precision_at_k(
    ranked: &[Vec<usize>],
    true_labels: &[usize],
    ks: &[usize],
    n_classes: usize,
) -> Result<BTreeMap<usize, f64>> {
    if ranked.len() != true_labels.len() {
        return Err(Error::Data(
            "ranked lists and labels differ in length".into(),
        ));
    }
    for (i, list) in ranked.iter().enumerate() {
        if list.len() != n_classes {
            return Err(Error::Data(format!(
                "example {i}: ranked list has {} entries, expected {n_classes}",
                list.len()
            )));
        }
        let mut seen = vec![false; n_classes];
        for &c in list {
            if c >= n_classes || seen[c] {
                return Err(Error::Data(format!(
                    "example {i}: ranked list is not a permutation of the classes"
                )));
            }
            seen[c] = true;
        }
    }
    for (i, &label) in true_labels.iter().enumerate() {
        if label >= n_classes {
            return Err(Error::Data(format!(
                "example {i}: label {label} outside {n_classes} classes"
            )));
        }
    }

    let n = ranked.len() as f64;
    let mut out = BTreeMap::new();
    for &k in ks {
        let hits = ranked
            .iter()
            .zip(true_labels)
            .filter(|(list, &label)| list[..k.min(list.len())].contains(&label))
            .count();
        out.insert(k, 100.0 * hits as f64 / n);
    }
    Ok(out)
}

/// K x K count matrix: rows are true classes, columns predicted (top-1).
pub fn confusion_matrix(
    ranked: &[Vec<usize>],
    true_labels: &[usize],
    n_classes: usize,
) -> Vec<Vec<usize>> {
    let mut m = vec![vec![0usize; n_classes]; n_classes];
    for (list, &label) in ranked.iter().zip(true_labels) {
        m[label][list[0]] += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ranking_breaks_ties_by_index() {
        assert_eq!(rank_classes(&[0.1, 0.9, 0.1]), vec![1, 0, 2]);
        assert_eq!(rank_classes(&[0.5, 0.5, 0.5]), vec![0, 1, 2]);
    }

    #[test]
    fn all_correct_gives_100() {
        let ranked = vec![vec![0, 1, 2], vec![1, 0, 2], vec![2, 1, 0]];
        let labels = vec![0, 1, 2];
        let p = precision_at_k(&ranked, &labels, &[1, 3], 3).unwrap();
        assert_eq!(p[&1], 100.0);
        assert_eq!(p[&3], 100.0);
    }

    #[test]
    fn uniform_random_ranking_matches_combinatorial_expectation() {
        // Over 9 classes, a uniform random ranking puts the true label in the
        // top 1 with probability 1/9 and in the top 3 with probability 3/9.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 10_000usize;
        let mut ranked = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let logits: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
            ranked.push(rank_classes(&logits));
            labels.push(rng.gen_range(0..9));
        }
        let p = precision_at_k(&ranked, &labels, &[1, 3, 9], 9).unwrap();
        assert!((p[&1] - 100.0 / 9.0).abs() < 3.0, "p@1 = {}", p[&1]);
        assert!((p[&3] - 300.0 / 9.0).abs() < 3.0, "p@3 = {}", p[&3]);
        assert_eq!(p[&9], 100.0);
    }

    #[test]
    fn monotone_in_k_and_tail_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200;
        let mut ranked = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let logits: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            ranked.push(rank_classes(&logits));
            labels.push(rng.gen_range(0..6));
        }
        let ks: Vec<usize> = (1..=6).collect();
        let p = precision_at_k(&ranked, &labels, &ks, 6).unwrap();
        let values: Vec<f64> = ks.iter().map(|k| p[k]).collect();
        for w in values.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }

        // Permuting entries below rank 2 cannot change precision@2.
        let mut permuted = ranked.clone();
        for list in &mut permuted {
            list[2..].reverse();
        }
        let p2a = precision_at_k(&ranked, &labels, &[2], 6).unwrap();
        let p2b = precision_at_k(&permuted, &labels, &[2], 6).unwrap();
        assert_eq!(p2a[&2], p2b[&2]);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let ranked = vec![vec![0, 1, 1]];
        assert!(precision_at_k(&ranked, &[0], &[1], 3).is_err());
        let ranked = vec![vec![0, 1, 2]];
        assert!(precision_at_k(&ranked, &[5], &[1], 3).is_err());
    }

    #[test]
    fn confusion_counts_top1() {
        let ranked = vec![vec![1, 0], vec![1, 0], vec![0, 1]];
        let labels = vec![0, 1, 1];
        let m = confusion_matrix(&ranked, &labels, 2);
        assert_eq!(m, vec![vec![0, 1], vec![1, 1]]);
    }
}
