use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::nn::Scalar;

/// ROC AUC through the Mann–Whitney rank statistic. Tied scores receive
/// their average rank, so each tied positive/negative pair counts one half.
pub fn auc<T: Scalar>(labels: &[bool], scores: &[T]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::invalid(format!(
            "auc: {} labels vs {} scores",
            labels.len(),
            scores.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "auc needs both classes, got {n_pos} positives and {n_neg} negatives"
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("auc: NaN score"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));

    // Sum of (1-based) ranks of the positives, ties averaged. Twice the rank
    // is kept as an integer so the statistic is exact.
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j share the average (i + 1 + j) / 2
        let twice_avg = (i + 1 + j) as u128;
        let pos_in_group = order[i..j].iter().filter(|&&k| labels[k]).count() as u128;
        twice_rank_sum += twice_avg * pos_in_group;
        i = j;
    }
    let p = n_pos as u128;
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::RngSeed;
    use rand::Rng as _;

    fn pairwise(labels: &[bool], scores: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    den += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn perfect_ranking() {
        assert_eq!(auc(&[true, false], &[0.9, 0.1]).unwrap(), 1.0);
        assert_eq!(auc(&[false, true], &[0.9, 0.1]).unwrap(), 0.0);
    }

    #[test]
    fn all_ties() {
        assert_eq!(auc(&[true, false, true, false, false], &[0.3; 5]).unwrap(), 0.5);
    }

    #[test]
    fn single_class_is_undefined() {
        assert!(matches!(auc(&[true, true], &[0.1, 0.2]), Err(Error::UndefinedMetric(_))));
        assert!(matches!(auc::<f64>(&[], &[]), Err(Error::UndefinedMetric(_))));
        assert!(auc(&[true, false], &[0.1]).is_err());
    }

    #[test]
    fn fifty_with_duplicates() {
        let mut rng = RngSeed(50).rng();
        for _ in 0..20 {
            let labels: Vec<bool> = (0..50).map(|_| rng.gen_bool(0.4)).collect();
            if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
                continue;
            }
            let scores: Vec<f64> = (0..50).map(|_| rng.gen_range(0..8) as f64 / 8.0).collect();
            assert!((auc(&labels, &scores).unwrap() - pairwise(&labels, &scores)).abs() < 1e-12);
        }
    }

    proptest::proptest! {
        #[test]
        fn monotone_transform_invariance(
            data in proptest::collection::vec((proptest::bool::ANY, -5i32..5), 2..80),
        ) {
            let labels: Vec<bool> = data.iter().map(|d| d.0).collect();
            proptest::prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let scores: Vec<f64> = data.iter().map(|d| d.1 as f64).collect();
            let transformed: Vec<f64> = scores.iter().map(|s| (0.7 * s).exp() * 3.0 + 1.0).collect();
            let a = auc(&labels, &scores).unwrap();
            proptest::prop_assert_eq!(a, auc(&labels, &transformed).unwrap());
            proptest::prop_assert!((a - pairwise(&labels, &scores)).abs() < 1e-12);
        }
    }
}
