//! Percentile thresholding, classification and detection metrics.

use serde::{Deserialize, Serialize};

use super::data::Label;
use crate::error::{Error, Result};

/// Empirical quantile of `densities` at level `outlier_rate`, interpolating
/// linearly between order statistics at position `rate * (N - 1)`.
///
/// With distinct values, `floor(rate * N)` or `ceil(rate * N)` samples fall
/// strictly below the result. When all values are equal the threshold equals
/// that value and nothing falls below it.
pub fn select_threshold(densities: &[f64], outlier_rate: f64) -> Result<f64> {
    if densities.is_empty() {
        return Err(Error::invalid("cannot threshold an empty density list"));
    }
    if !(outlier_rate > 0.0 && outlier_rate < 1.0) {
        return Err(Error::invalid(format!(
            "outlier rate must lie in (0, 1), got {outlier_rate}"
        )));
    }
    if densities.iter().any(|d| !d.is_finite()) {
        return Err(Error::invalid("densities must be finite"));
    }
    let mut sorted = densities.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = outlier_rate * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Outlier iff density is strictly below the threshold.
pub fn classify(densities: &[f64], threshold: f64) -> Vec<Label> {
    densities
        .iter()
        .map(|&d| if d < threshold { Label::Outlier } else { Label::Normal })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// F1 score with outliers as the positive class.
    pub f1_outlier: f64,
    pub auc: f64,
}

/// Accuracy, outlier F1 and ROC AUC.
///
/// AUC scores samples by negated density: it is the probability that a random
/// outlier has lower density than a random normal sample, ties counting one
/// half. F1 is 0 when there are no true or predicted outliers to match.
pub fn metrics(predictions: &[Label], truth: &[Label], densities: &[f64]) -> Result<Metrics> {
    if predictions.len() != truth.len() || densities.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: predictions.len().min(densities.len()),
        });
    }
    let positives = truth.iter().filter(|&&t| t == Label::Outlier).count();
    if positives == 0 || positives == truth.len() {
        return Err(Error::UndefinedMetric(
            "AUC and F1 need both normal and outlier samples".into(),
        ));
    }
    let correct = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    let tp = predictions
        .iter()
        .zip(truth)
        .filter(|&(&p, &t)| p == Label::Outlier && t == Label::Outlier)
        .count();
    let fp = predictions
        .iter()
        .zip(truth)
        .filter(|&(&p, &t)| p == Label::Outlier && t == Label::Normal)
        .count();
    let fn_ = positives - tp;
    let f1 = if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    };
    Ok(Metrics {
        accuracy: correct as f64 / truth.len() as f64,
        f1_outlier: f1,
        auc: auc_from_densities(truth, densities)?,
    })
}

/// Rank-based (Mann-Whitney) AUC with mid-ranks for ties.
///
/// Ranks are kept doubled so every quantity is an integer; the result is
/// `U / (n_pos n_neg)` evaluated with one final division.
pub fn auc_from_densities(truth: &[Label], densities: &[f64]) -> Result<f64> {
    if densities.iter().any(|d| d.is_nan()) {
        return Err(Error::invalid("densities must not be NaN"));
    }
    let n_pos = truth.iter().filter(|&&t| t == Label::Outlier).count() as u128;
    let n_neg = truth.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AUC needs both classes".into()));
    }
    // Ascending anomaly score = descending density.
    let mut order: Vec<usize> = (0..densities.len()).collect();
    order.sort_by(|&a, &b| densities[b].total_cmp(&densities[a]));

    let mut rank_sum2: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && densities[order[end]] == densities[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1..=end; doubled mid-rank is start + 1 + end.
        let mid2 = (start + 1 + end) as u128;
        for &i in &order[start..end] {
            if truth[i] == Label::Outlier {
                rank_sum2 += mid2;
            }
        }
        start = end;
    }
    let u2 = rank_sum2 - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg) as f64)
}
