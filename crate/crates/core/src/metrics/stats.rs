//! Prediction statistics: rank-based AUC, DeLong confidence intervals, and
//! the two-sided Wilcoxon signed-rank test (exact for n <= 12, normal
//! approximation with continuity and tie corrections above).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::metrics::MetricsError;

/// AUC with a DeLong confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucReport {
    pub auc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

fn check_labels(scores: &[f64], labels: &[bool]) -> Result<(usize, usize), MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::MismatchedLengths(scores.len(), labels.len()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::DegenerateLabels);
    }
    Ok((n_pos, n_neg))
}

/// Mid-ranks (1-based) of the values, ties averaged.
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Probability that a random positive outranks a random negative, with half
/// credit for ties (Mann-Whitney statistic).
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    let (n_pos, n_neg) = check_labels(scores, labels)?;
    let ranks = midranks(scores);
    let rank_sum_pos: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(r, _)| r)
        .sum();
    let u = rank_sum_pos - n_pos as f64 * (n_pos as f64 + 1.0) / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

fn placement(pos: f64, neg: f64) -> f64 {
    if pos > neg {
        1.0
    } else if pos == neg {
        0.5
    } else {
        0.0
    }
}

fn sample_variance(values: &[f64]) -> f64 {
    if values.len() <= 1 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

/// DeLong's closed-form AUC confidence interval from the per-positive and
/// per-negative placement values.
pub fn delong_ci(scores: &[f64], labels: &[bool], level: f64) -> Result<AucReport, MetricsError> {
    let (n_pos, n_neg) = check_labels(scores, labels)?;
    let positives: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(&s, _)| s)
        .collect();
    let negatives: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| !l)
        .map(|(&s, _)| s)
        .collect();

    let v10: Vec<f64> = positives
        .iter()
        .map(|&x| negatives.iter().map(|&y| placement(x, y)).sum::<f64>() / n_neg as f64)
        .collect();
    let v01: Vec<f64> = negatives
        .iter()
        .map(|&y| positives.iter().map(|&x| placement(x, y)).sum::<f64>() / n_pos as f64)
        .collect();
    let auc_value = v10.iter().sum::<f64>() / n_pos as f64;
    let variance = sample_variance(&v10) / n_pos as f64 + sample_variance(&v01) / n_neg as f64;

    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let z = normal.inverse_cdf(1.0 - (1.0 - level) / 2.0);
    let half = z * variance.sqrt();
    Ok(AucReport {
        auc: auc_value,
        ci_low: (auc_value - half).max(0.0),
        ci_high: (auc_value + half).min(1.0),
        n_pos,
        n_neg,
    })
}

fn nonzero_diffs(before: &[f64], after: &[f64]) -> Result<Vec<f64>, MetricsError> {
    if before.len() != after.len() {
        return Err(MetricsError::MismatchedLengths(before.len(), after.len()));
    }
    let diffs: Vec<f64> = before
        .iter()
        .zip(after)
        .map(|(b, a)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.len() < 5 {
        return Err(MetricsError::TooFewPairs {
            min: 5,
            found: diffs.len(),
        });
    }
    Ok(diffs)
}

/// Two-sided Wilcoxon signed-rank p-value for paired samples. Differences of
/// zero are dropped; at least 5 non-zero pairs are required.
pub fn wilcoxon_signed_rank(before: &[f64], after: &[f64]) -> Result<f64, MetricsError> {
    let diffs = nonzero_diffs(before, after)?;
    if diffs.len() <= 12 {
        wilcoxon_exact_p(&diffs)
    } else {
        wilcoxon_normal_p(&diffs)
    }
}

/// Exact two-sided p-value via the signed-rank distribution, computed as a
/// subset-sum polynomial over doubled mid-ranks (so tied ranks stay integral).
pub fn wilcoxon_exact_p(diffs: &[f64]) -> Result<f64, MetricsError> {
    let n = diffs.len();
    if n == 0 {
        return Err(MetricsError::TooFewPairs { min: 1, found: 0 });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let doubled: Vec<u64> = ranks.iter().map(|r| (2.0 * r).round() as u64).collect();
    let w2: u64 = doubled
        .iter()
        .zip(diffs)
        .filter(|(_, &d)| d > 0.0)
        .map(|(&r, _)| r)
        .sum();
    let total: u64 = doubled.iter().sum();

    // counts[w] = number of sign assignments with doubled rank-sum w
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    for &d in &doubled {
        for w in (d as usize..counts.len()).rev() {
            counts[w] += counts[w - d as usize];
        }
    }
    let denom = 2f64.powi(n as i32);
    let p_le: u64 = counts[..=w2 as usize].iter().sum();
    let p_ge: u64 = counts[w2 as usize..].iter().sum();
    let p = 2.0 * (p_le.min(p_ge) as f64) / denom;
    Ok(p.min(1.0))
}

/// Normal approximation with continuity correction and tie correction.
pub fn wilcoxon_normal_p(diffs: &[f64]) -> Result<f64, MetricsError> {
    let n = diffs.len();
    if n == 0 {
        return Err(MetricsError::TooFewPairs { min: 1, found: 0 });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let w_plus: f64 = ranks
        .iter()
        .zip(diffs)
        .filter(|(_, &d)| d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;

    // tie correction: group sizes over equal |d|
    let mut sorted = abs.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    if variance <= 0.0 {
        return Ok(1.0);
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = 2.0 * (1.0 - normal.cdf(z));
    Ok(p.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_perfectly_separated() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let labels = [true, true, false, false];
        assert_eq!(auc(&scores, &labels).unwrap(), 1.0);
    }

    #[test]
    fn auc_all_ties_is_half() {
        let scores = [0.5, 0.5, 0.5, 0.5];
        let labels = [true, false, true, false];
        assert_eq!(auc(&scores, &labels).unwrap(), 0.5);
    }

    #[test]
    fn auc_hand_case() {
        let scores = [0.9, 0.4, 0.6, 0.1];
        let labels = [true, true, false, false];
        assert_eq!(auc(&scores, &labels).unwrap(), 0.75);
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let scores = [0.9, 0.4, 0.6, 0.1, 0.55];
        let labels = [true, true, false, false, true];
        let transformed: Vec<f64> = scores.iter().map(|s: &f64| (5.0 * s).exp()).collect();
        assert_eq!(
            auc(&scores, &labels).unwrap(),
            auc(&transformed, &labels).unwrap()
        );
    }

    #[test]
    fn auc_degenerate_labels() {
        assert!(matches!(
            auc(&[0.1, 0.2], &[true, true]),
            Err(MetricsError::DegenerateLabels)
        ));
    }

    #[test]
    fn delong_interval_brackets_auc() {
        let scores = [0.9, 0.4, 0.6, 0.1];
        let labels = [true, true, false, false];
        let report = delong_ci(&scores, &labels, 0.95).unwrap();
        assert!((report.auc - 0.75).abs() < 1e-12);
        assert!(report.ci_low <= report.auc && report.auc <= report.ci_high);
        assert_eq!((report.n_pos, report.n_neg), (2, 2));
    }

    #[test]
    fn delong_collapses_on_separable_data() {
        let scores: Vec<f64> = (0..40).map(|i| if i < 20 { 0.9 } else { 0.1 }).collect();
        let labels: Vec<bool> = (0..40).map(|i| i < 20).collect();
        let report = delong_ci(&scores, &labels, 0.95).unwrap();
        assert_eq!(report.auc, 1.0);
        assert_eq!(report.ci_low, 1.0);
        assert_eq!(report.ci_high, 1.0);
    }

    #[test]
    fn delong_symmetric_under_score_negation_and_label_flip() {
        let scores = [0.9, 0.4, 0.6, 0.1, 0.7, 0.3];
        let labels = [true, true, false, false, true, false];
        let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        let a = delong_ci(&scores, &labels, 0.95).unwrap();
        let b = delong_ci(&negated, &flipped, 0.95).unwrap();
        assert!((a.auc - b.auc).abs() < 1e-12);
        assert!((a.ci_low - b.ci_low).abs() < 1e-12);
        assert!((a.ci_high - b.ci_high).abs() < 1e-12);
    }

    #[test]
    fn wilcoxon_identical_vectors_rejected() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert!(matches!(
            wilcoxon_signed_rank(&v, &v),
            Err(MetricsError::TooFewPairs { .. })
        ));
    }

    #[test]
    fn wilcoxon_strictly_dominated_n6() {
        let before = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let after = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0];
        let p = wilcoxon_signed_rank(&before, &after).unwrap();
        assert!((p - 0.03125).abs() < 1e-12);
    }

    #[test]
    fn wilcoxon_symmetric_diffs_p_one() {
        let diffs = [1.0, -1.0, 2.0, -2.0, 3.0, -3.0];
        let p = wilcoxon_exact_p(&diffs).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn exact_and_normal_agree_at_n12() {
        let before: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let after: Vec<f64> = (0..12)
            .map(|i| i as f64 + if i % 3 == 0 { -0.4 } else { 1.0 + i as f64 * 0.1 })
            .collect();
        let diffs: Vec<f64> = before.iter().zip(&after).map(|(b, a)| a - b).collect();
        let exact = wilcoxon_exact_p(&diffs).unwrap();
        let approx = wilcoxon_normal_p(&diffs).unwrap();
        assert!(
            (exact - approx).abs() < 0.02,
            "exact {exact} vs approx {approx}"
        );
    }
}
