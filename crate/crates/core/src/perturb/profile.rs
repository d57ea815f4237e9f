use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use super::{js_divergence, Cue, Manipulation};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ManipulationScore {
    pub manipulation: String,
    pub mean_djs: f64,
}

/// Totals and normalized shares along one axis (frequency or HVS cue).
#[derive(Debug, Clone, Serialize)]
pub struct AxisShares {
    pub labels: Vec<String>,
    pub totals: Vec<f64>,
    pub shares: Vec<f64>,
    /// Set when every total is zero; shares are then uniform.
    pub degenerate: bool,
}

impl AxisShares {
    fn from_totals(labels: Vec<String>, totals: Vec<f64>) -> Self {
        let sum: f64 = totals.iter().sum();
        let k = totals.len();
        let (shares, degenerate) = if k == 0 {
            (Vec::new(), false)
        } else if sum > 0.0 {
            (totals.iter().map(|t| t / sum).collect(), false)
        } else {
            (vec![1.0 / k as f64; k], true)
        };
        Self {
            labels,
            totals,
            shares,
            degenerate,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityProfile {
    pub per_manipulation: Vec<ManipulationScore>,
    /// One entry per suppressed band, ordered by center.
    pub frequency: AxisShares,
    /// One entry per cue, summed over severities.
    pub hvs: AxisShares,
}

impl SensitivityProfile {
    pub fn is_degenerate(&self) -> bool {
        self.frequency.degenerate || self.hvs.degenerate
    }
}

fn mean_divergence(clean: &Array2<f64>, perturbed: &Array2<f64>) -> Result<f64> {
    let per_sample: Vec<f64> = (0..clean.nrows())
        .into_par_iter()
        .map(|i| {
            let p = clean.row(i).to_vec();
            let q = perturbed.row(i).to_vec();
            js_divergence(&p, &q).map_err(|e| Error::InvalidInput(format!("row {i}: {e}")))
        })
        .collect::<Result<_>>()?;
    Ok(per_sample.iter().sum::<f64>() / per_sample.len() as f64)
}

/// Mean JS divergence per manipulation plus axis-normalized shares.
pub fn sensitivity_profile(clean: &Array2<f64>, perturbed: &[(Manipulation, Array2<f64>)]) -> Result<SensitivityProfile> {
    if clean.nrows() == 0 {
        return Err(Error::InsufficientData("no samples".into()));
    }
    let mut per_manipulation = Vec::with_capacity(perturbed.len());
    let mut bands: Vec<(f64, f64)> = Vec::new();
    let mut cues = [0.0f64; 3];
    let mut cue_seen = [false; 3];
    for (m, probs) in perturbed {
        if probs.dim() != clean.dim() {
            return Err(Error::Shape(format!(
                "{m}: perturbed softmax {:?} vs clean {:?}",
                probs.dim(),
                clean.dim()
            )));
        }
        let mean = mean_divergence(clean, probs)?;
        match m {
            Manipulation::Frequency(b) => match bands.iter_mut().find(|(c, _)| *c == b.center) {
                Some(entry) => entry.1 += mean,
                None => bands.push((b.center, mean)),
            },
            Manipulation::Hvs { cue, .. } => {
                let k = Cue::ALL.iter().position(|c| c == cue).expect("known cue");
                cues[k] += mean;
                cue_seen[k] = true;
            }
        }
        per_manipulation.push(ManipulationScore {
            manipulation: m.to_string(),
            mean_djs: mean,
        });
    }
    bands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let frequency = AxisShares::from_totals(
        bands.iter().map(|(c, _)| format!("freq:{c}")).collect(),
        bands.iter().map(|(_, v)| *v).collect(),
    );
    let (labels, totals): (Vec<String>, Vec<f64>) = Cue::ALL
        .iter()
        .enumerate()
        .filter(|(k, _)| cue_seen[*k])
        .map(|(k, c)| (c.name().to_string(), cues[k]))
        .unzip();
    Ok(SensitivityProfile {
        per_manipulation,
        frequency,
        hvs: AxisShares::from_totals(labels, totals),
    })
}
