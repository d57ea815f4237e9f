use rayon::prelude::*;
use serde::Serialize;

use super::calibration::{smooth_ece, Bandwidth, CalibrationInput, MIN_SAMPLES};
use super::estimators::EuScore;
use crate::{Error, Result};

/// Largest rejection percentage on the grid `0..=90`.
pub const ALIGNMENT_MAX_Q: usize = 90;
/// Baseline error below which the normalization is undefined.
pub const DEGENERATE_ECE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct AbstentionCurve {
    pub q: Vec<usize>,
    pub ece: Vec<f64>,
    /// `ECE_q / ECE_0`; empty when degenerate.
    pub ratio: Vec<f64>,
    /// Trapezoidal mean of the ratio over the grid; 1 for random rejection.
    pub score: Option<f64>,
    pub degenerate: bool,
}

/// Recomputes smooth ECE after rejecting the top `q%` most uncertain
/// samples for every `q` on the grid.
pub fn alignment_score(eu: &[f64], input: &CalibrationInput) -> Result<AbstentionCurve> {
    if eu.len() != input.len() {
        return Err(Error::Shape(format!("{} uncertainty scores vs {} samples", eu.len(), input.len())));
    }
    let n = input.len();
    let retained = n - ALIGNMENT_MAX_Q * n / 100;
    if retained < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "alignment needs at least {MIN_SAMPLES} samples left after rejecting {ALIGNMENT_MAX_Q}%, {n} samples leave {retained}"
        )));
    }
    // most uncertain first; ties keep the lower index first
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eu[b].total_cmp(&eu[a]).then(a.cmp(&b)));
    let q: Vec<usize> = (0..=ALIGNMENT_MAX_Q).collect();
    let ece: Vec<f64> = q
        .par_iter()
        .map(|&q| {
            let removed = q * n / 100;
            let mut kept = order[removed..].to_vec();
            kept.sort_unstable();
            smooth_ece(&input.subset(&kept), Bandwidth::Auto).map(|e| e.value)
        })
        .collect::<Result<_>>()?;
    if ece[0] < DEGENERATE_ECE {
        return Ok(AbstentionCurve {
            q,
            ece,
            ratio: Vec::new(),
            score: None,
            degenerate: true,
        });
    }
    let ratio: Vec<f64> = ece.iter().map(|e| e / ece[0]).collect();
    let inner: f64 = ratio[1..ALIGNMENT_MAX_Q].iter().sum();
    let score = (0.5 * (ratio[0] + ratio[ALIGNMENT_MAX_Q]) + inner) / ALIGNMENT_MAX_Q as f64;
    Ok(AbstentionCurve {
        q,
        ece,
        ratio,
        score: Some(score),
        degenerate: false,
    })
}

/// Convenience wrapper orienting an estimator's scores first.
impl EuScore {
    pub fn alignment(&self, input: &CalibrationInput) -> Result<AbstentionCurve> {
        alignment_score(&self.oriented(), input)
    }
}
