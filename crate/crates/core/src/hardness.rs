//! Per-sample hardness estimators and their composite.
//!
//! Each estimator has a direction: [`Direction::Up`] when larger raw values
//! mean harder samples, [`Direction::Down`] otherwise. The composite
//! min-max normalizes every available metric, flips the `Down` ones, and
//! averages them with equal weight.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::Serialize;

use crate::gaussian::ClassGaussians;
use crate::neighbors::NeighborIndex;
use crate::numeric::{l2_norm, population_variance, softmax};
use crate::telemetry::{correctness_matrix, LabelSet, PredictionTrace, Run};
use crate::{Error, Result};

/// k used by the prediction-depth probe.
pub const DEPTH_K: usize = 25;

pub use crate::numeric::Direction;

#[derive(Debug, Clone)]
pub struct MetricScores {
    pub name: &'static str,
    pub direction: Direction,
    pub raw: Vec<f64>,
}

/// Fraction of checkpoints at which each sample is correct.
pub fn learning_speed(correct: &Array2<bool>) -> Vec<f64> {
    let t = correct.ncols() as f64;
    correct
        .outer_iter()
        .map(|row| row.iter().filter(|&&c| c).count() as f64 / t)
        .collect()
}

/// Number of correct → incorrect transitions between consecutive checkpoints.
pub fn forgetting_score(correct: &Array2<bool>) -> Vec<usize> {
    correct
        .outer_iter()
        .map(|row| row.windows(2).into_iter().filter(|w| w[0] && !w[1]).count())
        .collect()
}

fn check_trace(trace: &PredictionTrace, labels: &LabelSet) -> Result<()> {
    if trace.num_samples() != labels.len() {
        return Err(Error::Shape(format!(
            "{} traced samples vs {} labels",
            trace.num_samples(),
            labels.len()
        )));
    }
    if trace.num_classes() < 2 {
        return Err(Error::InvalidInput("margins need at least two classes".into()));
    }
    Ok(())
}

/// Area under the margin: mean over checkpoints of the true logit minus the
/// largest other logit.
pub fn aum(trace: &PredictionTrace, labels: &LabelSet) -> Result<Vec<f64>> {
    check_trace(trace, labels)?;
    let y = labels.as_slice();
    let t = trace.checkpoints() as f64;
    Ok((0..labels.len())
        .map(|i| {
            trace
                .iter()
                .map(|z| {
                    let row = z.row(i);
                    let other = row
                        .iter()
                        .enumerate()
                        .filter(|(c, _)| *c != y[i])
                        .map(|(_, v)| *v)
                        .fold(f64::NEG_INFINITY, f64::max);
                    row[y[i]] - other
                })
                .sum::<f64>()
                / t
        })
        .collect())
}

/// Mean over checkpoints of `‖softmax(z) − onehot(y)‖₂`.
pub fn el2n(trace: &PredictionTrace, labels: &LabelSet) -> Result<Vec<f64>> {
    check_trace(trace, labels)?;
    let y = labels.as_slice();
    let t = trace.checkpoints() as f64;
    Ok((0..labels.len())
        .map(|i| {
            trace
                .iter()
                .map(|z| {
                    let mut err = softmax(&z.row(i).to_vec());
                    err[y[i]] -= 1.0;
                    l2_norm(&err)
                })
                .sum::<f64>()
                / t
        })
        .collect())
}

/// Majority label among neighbors; ties go to the lower class.
fn vote(labels: &[usize], neighbors: &[crate::neighbors::Neighbor], num_classes: usize) -> Option<usize> {
    if neighbors.is_empty() {
        return None;
    }
    let mut counts = vec![0usize; num_classes];
    for n in neighbors {
        counts[labels[n.index]] += 1;
    }
    let mut best = 0;
    for c in 1..num_classes {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    Some(best)
}

/// Earliest probe layer (1-based position in `layers`) whose leave-self-out
/// k-NN vote recovers the label; `layers.len() + 1` when none does.
pub fn prediction_depth(layers: &[Array2<f64>], labels: &LabelSet, k: usize) -> Result<Vec<usize>> {
    let n = labels.len();
    if let Some(l) = layers.iter().position(|f| f.nrows() != n) {
        return Err(Error::Shape(format!("layer {l} has {} rows, expected {n}", layers[l].nrows())));
    }
    let y = labels.as_slice();
    let sentinel = layers.len() + 1;
    let mut depth = vec![sentinel; n];
    for (pos, feats) in layers.iter().enumerate() {
        let index = NeighborIndex::new(feats.clone());
        let hits: Vec<bool> = (0..n)
            .into_par_iter()
            .map(|i| depth[i] == sentinel && vote(y, &index.query_self(i, k), labels.num_classes()) == Some(y[i]))
            .collect();
        for (i, hit) in hits.into_iter().enumerate() {
            if hit {
                depth[i] = pos + 1;
            }
        }
    }
    Ok(depth)
}

/// Population variance of each row of gradient magnitudes.
pub fn vog(grad_magnitudes: &Array2<f64>) -> Vec<f64> {
    grad_magnitudes
        .outer_iter()
        .map(|row| population_variance(&row.to_vec()))
        .collect()
}

/// Mahalanobis distance of every sample to its nearest class centroid under
/// a fitted model.
pub fn prototypicality_with(model: &ClassGaussians, features: ArrayView2<f64>) -> Vec<f64> {
    (0..features.nrows())
        .into_par_iter()
        .map(|i| model.min_mahalanobis(features.row(i)))
        .collect()
}

/// Fits shared-covariance class Gaussians on the training rows and scores every row.
pub fn prototypicality(features: &Array2<f64>, labels: &LabelSet, train_mask: &[bool]) -> Result<Vec<f64>> {
    let train: Vec<usize> = (0..labels.len()).filter(|&i| train_mask[i]).collect();
    let x = features.select(ndarray::Axis(0), &train);
    let y: Vec<usize> = train.iter().map(|&i| labels.as_slice()[i]).collect();
    let model = ClassGaussians::fit(x.view(), &y, labels.num_classes(), false)?;
    Ok(prototypicality_with(&model, features.view()))
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalizedMetric {
    pub name: &'static str,
    pub direction: Direction,
    pub raw: Vec<f64>,
    /// Min-max normalized and oriented so that 1 is hardest.
    pub normalized: Vec<f64>,
    /// Set when min == max; normalized scores are then 0.5.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HardnessProfile {
    pub metrics: Vec<NormalizedMetric>,
    pub composite: Vec<f64>,
    /// Set when every metric is degenerate.
    pub degenerate: bool,
}

impl HardnessProfile {
    pub fn metric_names(&self) -> Vec<&'static str> {
        self.metrics.iter().map(|m| m.name).collect()
    }
}

fn normalize(m: &MetricScores) -> NormalizedMetric {
    let min = m.raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = m.raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let degenerate = !(max > min);
    let normalized = m
        .raw
        .iter()
        .map(|&v| {
            if degenerate {
                0.5
            } else {
                let u = (v - min) / (max - min);
                match m.direction {
                    Direction::Up => u,
                    Direction::Down => 1.0 - u,
                }
            }
        })
        .collect();
    NormalizedMetric {
        name: m.name,
        direction: m.direction,
        raw: m.raw.clone(),
        normalized,
        degenerate,
    }
}

/// Equal-weight composite of the supplied metrics.
pub fn composite(metrics: &[MetricScores]) -> Result<HardnessProfile> {
    let first = metrics
        .first()
        .ok_or_else(|| Error::InsufficientData("no hardness metrics available".into()))?;
    let n = first.raw.len();
    if let Some(m) = metrics.iter().find(|m| m.raw.len() != n) {
        return Err(Error::Shape(format!("metric {} has {} scores, expected {n}", m.name, m.raw.len())));
    }
    let normalized: Vec<NormalizedMetric> = metrics.iter().map(normalize).collect();
    let k = normalized.len() as f64;
    let composite = (0..n)
        .map(|i| normalized.iter().map(|m| m.normalized[i]).sum::<f64>() / k)
        .collect();
    let degenerate = normalized.iter().all(|m| m.degenerate);
    Ok(HardnessProfile {
        metrics: normalized,
        composite,
        degenerate,
    })
}

/// The four metrics computed from the logit trace alone.
pub fn dynamics_metrics(trace: &PredictionTrace, labels: &LabelSet) -> Result<Vec<MetricScores>> {
    let correct = correctness_matrix(trace, labels)?;
    Ok(vec![
        MetricScores {
            name: "learning_speed",
            direction: Direction::Down,
            raw: learning_speed(&correct),
        },
        MetricScores {
            name: "forgetting",
            direction: Direction::Up,
            raw: forgetting_score(&correct).into_iter().map(|v| v as f64).collect(),
        },
        MetricScores {
            name: "aum",
            direction: Direction::Down,
            raw: aum(trace, labels)?,
        },
        MetricScores {
            name: "el2n",
            direction: Direction::Up,
            raw: el2n(trace, labels)?,
        },
    ])
}

/// Every metric the run's telemetry supports.
pub fn collect_metrics(run: &Run, k: usize) -> Result<Vec<MetricScores>> {
    let mut out = dynamics_metrics(&run.trace, &run.labels)?;
    if !run.features.is_empty() {
        let layers: Vec<Array2<f64>> = run.features.iter().map(|(_, f)| f.clone()).collect();
        out.push(MetricScores {
            name: "prediction_depth",
            direction: Direction::Up,
            raw: prediction_depth(&layers, &run.labels, k)?
                .into_iter()
                .map(|d| d as f64)
                .collect(),
        });
    }
    if let Some(g) = &run.grad_magnitudes {
        out.push(MetricScores {
            name: "vog",
            direction: Direction::Up,
            raw: vog(g),
        });
    }
    if let Some(f) = run.final_features() {
        out.push(MetricScores {
            name: "prototypicality",
            direction: Direction::Up,
            raw: prototypicality(f, &run.labels, &run.train_mask)?,
        });
    }
    Ok(out)
}
