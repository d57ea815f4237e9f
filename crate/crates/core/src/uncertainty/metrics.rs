use ndarray::ArrayView2;
use serde::Serialize;

use crate::numeric::{argmax, average_ranks, softmax};
use crate::{Error, Result};

/// Probability that a random positive outscores a random negative, ties
/// counting one half. `None` without both classes present.
pub fn auroc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let np = n_pos as f64;
    Some((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Area under the precision-recall step curve: `Σ (R_k − R_{k−1}) P_k`
/// over distinct score thresholds, highest first.
pub fn average_precision(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let total_pos = positive.iter().filter(|&&p| p).count();
    if total_pos == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if positive[order[j]] {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        let recall = tp as f64 / total_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    Some(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
}

/// Argmax accuracy plus ranking metrics of the softmax probability of
/// `positive_class` against membership in that class.
pub fn classification_metrics(logits: ArrayView2<f64>, labels: &[usize], positive_class: usize) -> Result<ClassificationMetrics> {
    if logits.nrows() != labels.len() {
        return Err(Error::Shape(format!("{} logit rows vs {} labels", logits.nrows(), labels.len())));
    }
    if labels.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    if positive_class >= logits.ncols() {
        return Err(Error::InvalidInput(format!(
            "positive class {positive_class} out of range for {} classes",
            logits.ncols()
        )));
    }
    let mut hits = 0usize;
    let mut scores = Vec::with_capacity(labels.len());
    for (row, &y) in logits.outer_iter().zip(labels) {
        let z = row.to_vec();
        hits += usize::from(argmax(&z) == y);
        scores.push(softmax(&z)[positive_class]);
    }
    let positive: Vec<bool> = labels.iter().map(|&y| y == positive_class).collect();
    Ok(ClassificationMetrics {
        accuracy: hits as f64 / labels.len() as f64,
        auroc: auroc(&scores, &positive),
        auprc: average_precision(&scores, &positive),
    })
}
