//! Ranking metrics and repeat aggregation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Validation("non-finite score".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    Ok((pos, labels.len() - pos))
}

/// Area under the ROC curve in its Mann–Whitney form: the probability that a
/// random positive outscores a random negative, ties counting one half.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of mid-ranks of the positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        let tied_pos = order[i..=j].iter().filter(|&&k| labels[k]).count();
        rank_sum += mid * tied_pos as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Area under the precision–recall curve as average precision,
/// `Σ (Rᵢ − Rᵢ₋₁)·Pᵢ` over descending score thresholds. Tied scores form a
/// single threshold.
pub fn auprc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = check(scores, labels)?;
    if pos == 0 {
        return Err(Error::Validation(
            "average precision needs at least one positive".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            if labels[k] {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j + 1;
    }
    Ok(ap)
}

/// Mean and sample standard deviation (n − 1 denominator; 0 for one run).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.mean, self.std)
    }
}

pub fn aggregate(runs: &[f64]) -> Result<MeanStd> {
    if runs.is_empty() {
        return Err(Error::Validation("cannot aggregate zero runs".into()));
    }
    let n = runs.len();
    let mean = runs.iter().sum::<f64>() / n as f64;
    let std = if n == 1 {
        0.0
    } else {
        (runs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Ok(MeanStd { mean, std, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn brute_auroc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    fn split(pos: &[f64], neg: &[f64]) -> (Vec<f64>, Vec<bool>) {
        let scores = pos.iter().chain(neg).copied().collect();
        let labels = pos
            .iter()
            .map(|_| true)
            .chain(neg.iter().map(|_| false))
            .collect();
        (scores, labels)
    }

    #[test]
    fn auroc_examples() {
        let (s, l) = split(&[0.9, 0.8], &[0.7, 0.1]);
        assert_eq!(auroc(&s, &l).unwrap(), 1.0);
        let (s, l) = split(&[0.8, 0.3], &[0.5, 0.1]);
        assert_eq!(auroc(&s, &l).unwrap(), 0.75);
        let (s, l) = split(&[0.4, 0.4], &[0.4]);
        assert_eq!(auroc(&s, &l).unwrap(), 0.5);
        assert!(matches!(
            auroc(&[0.1, 0.2], &[true, true]),
            Err(Error::SingleClass)
        ));
        assert!(auroc(&[0.1], &[true, false]).is_err());
    }

    #[test]
    fn auprc_examples() {
        let (s, l) = split(&[0.9, 0.8], &[0.7, 0.1]);
        assert_eq!(auprc(&s, &l).unwrap(), 1.0);
        let (s, l) = split(&[0.1], &[0.9, 0.8, 0.7]);
        assert_eq!(auprc(&s, &l).unwrap(), 0.25);
        assert!(auprc(&[0.1], &[false]).is_err());
        // one tie group holding everything: precision equals prevalence
        assert_eq!(
            auprc(&[0.5; 4], &[true, false, false, false]).unwrap(),
            0.25
        );
    }

    #[test]
    fn random_scores_average_to_prevalence() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let (n, pos) = (2000, 500);
        let labels: Vec<bool> = (0..n).map(|i| i < pos).collect();
        let mut scores: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let shuffles = 10_000;
        let mut total = 0.0;
        for _ in 0..shuffles {
            scores.shuffle(&mut rng);
            total += auprc(&scores, &labels).unwrap();
        }
        let mean = total / shuffles as f64;
        assert!((mean - 0.25).abs() < 0.02, "mean AP {mean}");
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&[0.8]).unwrap().to_string(), "0.800 ± 0.000");
        let a = aggregate(&[0.7, 0.9]).unwrap();
        assert!((a.std - 0.02f64.sqrt()).abs() < 1e-12);
        assert_eq!(a.to_string(), "0.800 ± 0.141");
        assert_eq!(aggregate(&[0.9, 0.7]).unwrap(), a);
        assert!(aggregate(&[]).is_err());
    }

    fn arb_scored() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
        (1usize..=200, 1usize..=200).prop_flat_map(|(p, n)| {
            // a coarse grid produces plenty of ties
            (
                proptest::collection::vec((0u32..50).prop_map(|x| x as f64 / 49.0), p + n),
                Just((p, n)),
            )
                .prop_map(|(scores, (p, n))| {
                    let labels = (0..p + n).map(|i| i < p).collect();
                    (scores, labels)
                })
        })
    }

    proptest! {
        #[test]
        fn auroc_matches_pair_counting((s, l) in arb_scored()) {
            prop_assert!((auroc(&s, &l).unwrap() - brute_auroc(&s, &l)).abs() <= 1e-12);
        }

        #[test]
        fn auroc_monotone_invariant((s, l) in arb_scored()) {
            let t: Vec<f64> = s.iter().map(|x| (3.0 * x).exp() - 7.0).collect();
            prop_assert!((auroc(&s, &l).unwrap() - auroc(&t, &l).unwrap()).abs() <= 1e-12);
        }

        #[test]
        fn auroc_complement((s, l) in arb_scored()) {
            let flipped: Vec<bool> = l.iter().map(|x| !x).collect();
            prop_assert!((auroc(&s, &l).unwrap() - (1.0 - auroc(&s, &flipped).unwrap())).abs() <= 1e-12);
        }

        #[test]
        fn auprc_one_iff_perfect((s, l) in arb_scored()) {
            let ap = auprc(&s, &l).unwrap();
            let min_pos = s.iter().zip(&l).filter(|x| *x.1).map(|x| *x.0).fold(f64::INFINITY, f64::min);
            let max_neg = s.iter().zip(&l).filter(|x| !*x.1).map(|x| *x.0).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!((ap - 1.0).abs() < 1e-12, min_pos > max_neg);
            prop_assert!(ap > 0.0 && ap <= 1.0 + 1e-12);
        }
    }
}
