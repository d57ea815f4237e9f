//! Intrinsic-dimension estimators over representation spaces, and the
//! per-pixel PCA used to reduce multi-channel tiles.

mod pca;

pub use pca::{pca_channel_reduce, PcaModel};

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::symmetric_eigen;
use crate::neighbors::NeighborIndex;
use crate::{Error, Result};

pub const LPCA_K: usize = 20;
pub const LPCA_VARIANCE: f64 = 0.95;
pub const TWO_NN_DISCARD: f64 = 0.10;
pub const MLE_K: usize = 6;
pub const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdEstimate {
    pub estimator: String,
    pub value: f64,
    pub params: BTreeMap<String, f64>,
    /// Samples dropped because of duplicate points.
    pub excluded: usize,
    pub degenerate: bool,
}

impl IdEstimate {
    fn new(estimator: &str, value: f64, params: &[(&str, f64)]) -> Self {
        Self {
            estimator: estimator.to_string(),
            value,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            excluded: 0,
            degenerate: false,
        }
    }
}

/// Leading components needed to reach `threshold` of the spectrum, or
/// `None` when the spectrum is empty.
fn components_for(eigenvalues: &[f64], total: f64, threshold: f64) -> Option<usize> {
    if total <= 0.0 {
        return None;
    }
    let mut acc = 0.0;
    for (i, &v) in eigenvalues.iter().enumerate() {
        acc += v.max(0.0);
        if acc >= threshold * total * (1.0 - 1e-12) {
            return Some(i + 1);
        }
    }
    Some(eigenvalues.len())
}

/// Local PCA dimension of one neighborhood (`m × n`, rows are points).
pub fn local_pca_dimension(neighborhood: ArrayView2<f64>, threshold: f64) -> Option<usize> {
    let m = neighborhood.nrows();
    if m == 0 {
        return None;
    }
    let mean = neighborhood.mean_axis(Axis(0)).expect("non-empty");
    let centered = &neighborhood - &mean;
    let total: f64 = centered.iter().map(|v| v * v).sum();
    // the m × m Gram matrix shares its nonzero spectrum with the covariance
    let gram = centered.dot(&centered.t());
    let (values, _) = symmetric_eigen(&gram);
    components_for(&values, total, threshold)
}

/// Mean over samples of the number of principal components explaining
/// `threshold` of the variance among each sample's `k` nearest neighbors.
pub fn id_lpca(features: ArrayView2<f64>, k: usize, threshold: f64) -> Result<IdEstimate> {
    let n = features.nrows();
    if n < 2 {
        return Err(Error::InsufficientData(format!("lpca needs at least 2 samples, got {n}")));
    }
    let index = NeighborIndex::new(features.to_owned());
    let counts: Vec<Option<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let nn = index.query_self(i, k);
            let rows: Vec<usize> = nn.iter().map(|x| x.index).collect();
            local_pca_dimension(features.select(Axis(0), &rows).view(), threshold)
        })
        .collect();
    let mut est = IdEstimate::new("lpca", 0.0, &[("k", k as f64), ("variance_threshold", threshold)]);
    if counts.iter().all(Option::is_none) {
        est.degenerate = true;
        return Ok(est);
    }
    est.value = counts.iter().map(|c| c.unwrap_or(0) as f64).sum::<f64>() / n as f64;
    Ok(est)
}

/// Least-squares slope through the origin of `−log(1 − F̂(μ))` against
/// `log μ`, after discarding the largest `discard` fraction of ratios.
pub fn two_nn_from_ratios(ratios: &[f64], discard: f64) -> Result<f64> {
    if ratios.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "2nn needs at least {MIN_SAMPLES} ratios, got {}",
            ratios.len()
        )));
    }
    if !(0.0..1.0).contains(&discard) {
        return Err(Error::InvalidInput(format!("discard fraction {discard} outside [0, 1)")));
    }
    let mut mu = ratios.to_vec();
    mu.sort_by(f64::total_cmp);
    let n = mu.len();
    // F̂ reaches 1 at the last ratio, so at least that one is always dropped
    let keep = (((1.0 - discard) * n as f64).floor() as usize).min(n - 1);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &m) in mu[..keep].iter().enumerate() {
        let f = (i + 1) as f64 / n as f64;
        let x = m.ln();
        let y = -(1.0 - f).ln();
        sxy += x * y;
        sxx += x * x;
    }
    if sxx <= 0.0 {
        return Err(Error::InsufficientData("2nn ratios carry no spread".into()));
    }
    Ok(sxy / sxx)
}

/// Two-nearest-neighbor estimator on the ratios `μ = r₂ / r₁`.
pub fn id_2nn(features: ArrayView2<f64>, discard: f64) -> Result<IdEstimate> {
    let n = features.nrows();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!("2nn needs at least {MIN_SAMPLES} samples, got {n}")));
    }
    let index = NeighborIndex::new(features.to_owned());
    let ratios: Vec<Option<f64>> = index
        .all_self(2)
        .into_iter()
        .map(|nn| (nn[0].distance > 0.0).then(|| nn[1].distance / nn[0].distance))
        .collect();
    let valid: Vec<f64> = ratios.iter().flatten().copied().collect();
    let mut est = IdEstimate::new("2nn", two_nn_from_ratios(&valid, discard)?, &[("discard_fraction", discard)]);
    est.excluded = n - valid.len();
    Ok(est)
}

/// Per-sample maximum-likelihood dimension from sorted neighbor distances
/// `T_1 ≤ … ≤ T_k`; `None` for duplicates or a flat distance profile.
pub fn mle_from_distances(distances: &[f64]) -> Option<f64> {
    let k = distances.len();
    if k < 2 || distances[0] <= 0.0 {
        return None;
    }
    let tk = distances[k - 1];
    let s: f64 = distances[..k - 1].iter().map(|t| (tk / t).ln()).sum();
    (s > 0.0).then(|| (k - 1) as f64 / s)
}

/// Mean of per-sample maximum-likelihood estimates with `k` neighbors.
pub fn id_mle(features: ArrayView2<f64>, k: usize) -> Result<IdEstimate> {
    let n = features.nrows();
    if k < 2 {
        return Err(Error::InvalidInput("mle needs k >= 2".into()));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!("mle with k={k} needs more than {k} samples, got {n}")));
    }
    let index = NeighborIndex::new(features.to_owned());
    let per_sample: Vec<Option<f64>> = index
        .all_self(k)
        .into_iter()
        .map(|nn| mle_from_distances(&nn.iter().map(|x| x.distance).collect::<Vec<_>>()))
        .collect();
    let valid: Vec<f64> = per_sample.iter().flatten().copied().collect();
    if valid.is_empty() {
        return Err(Error::InsufficientData("every sample has duplicate neighbors".into()));
    }
    let mut est = IdEstimate::new("mle", valid.iter().sum::<f64>() / valid.len() as f64, &[("k", k as f64)]);
    est.excluded = n - valid.len();
    Ok(est)
}

/// Runs all three estimators with default parameters.
pub fn estimate_all(features: ArrayView2<f64>) -> Result<Vec<IdEstimate>> {
    Ok(vec![
        id_lpca(features, LPCA_K, LPCA_VARIANCE)?,
        id_mle(features, MLE_K)?,
        id_2nn(features, TWO_NN_DISCARD)?,
    ])
}

pub(crate) fn random_rotation(dim: usize, rng: &mut impl rand::Rng) -> Array2<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let g = nalgebra::DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    let q = g.qr().q();
    Array2::from_shape_fn((dim, dim), |(r, c)| q[(r, c)])
}
