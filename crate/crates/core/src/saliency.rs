//! Grad-CAM++ maps from recorded activations and gradients, and the
//! concordance between the most salient pixels and a reference mask.

use ndarray::{Array2, ArrayView2, ArrayView3, Axis};
use rayon::prelude::*;
use serde::Serialize;

use crate::telemetry::{LabelSet, SaliencyTelemetry};
use crate::{Error, Result};

pub const MIN_PERCENTILE: usize = 90;
pub const MAX_PERCENTILE: usize = 100;

/// A saliency map normalized to `[0, 1]`. A flat map carries no
/// attention and is all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub values: Array2<f64>,
    pub flat: bool,
}

/// Grad-CAM++ channel weights for `K × h × w` activations `A` and the
/// gradients `G` of the exponentiated class score.
pub fn gradcam_pp_weights(a: ArrayView3<f64>, g: ArrayView3<f64>) -> Result<Vec<f64>> {
    if a.dim() != g.dim() {
        return Err(Error::Shape(format!("activations {:?} vs gradients {:?}", a.dim(), g.dim())));
    }
    Ok(a.outer_iter()
        .zip(g.outer_iter())
        .map(|(ak, gk)| {
            let s = ak.sum();
            gk.iter()
                .map(|&gv| {
                    let g2 = gv * gv;
                    let denom = 2.0 * g2 + s * g2 * gv;
                    let alpha = if g2 == 0.0 || denom == 0.0 { 0.0 } else { g2 / denom };
                    alpha * gv.max(0.0)
                })
                .sum()
        })
        .collect())
}

/// Bilinear resampling with pixel-center alignment and edge clamping.
pub fn bilinear_resize(src: ArrayView2<f64>, out: (usize, usize)) -> Array2<f64> {
    let (h, w) = src.dim();
    let coord = |dst: usize, n_out: usize, n_in: usize| {
        let x = ((dst as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5).clamp(0.0, (n_in - 1) as f64);
        let lo = x.floor() as usize;
        let hi = (lo + 1).min(n_in - 1);
        (lo, hi, x - lo as f64)
    };
    Array2::from_shape_fn(out, |(y, x)| {
        let (y0, y1, fy) = coord(y, out.0, h);
        let (x0, x1, fx) = coord(x, out.1, w);
        let top = src[[y0, x0]] * (1.0 - fx) + src[[y0, x1]] * fx;
        let bottom = src[[y1, x0]] * (1.0 - fx) + src[[y1, x1]] * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

/// Rescales to `[0, 1]`; a map without spread becomes flat zeros.
pub fn min_max_normalize(map: Array2<f64>) -> SaliencyMap {
    let lo = map.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = map.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return SaliencyMap {
            values: Array2::zeros(map.dim()),
            flat: true,
        };
    }
    SaliencyMap {
        values: map.mapv(|v| (v - lo) / (hi - lo)),
        flat: false,
    }
}

/// `ReLU(Σ_k w_k A_k)` upsampled to `out` and min-max normalized.
pub fn gradcam_pp(a: ArrayView3<f64>, g: ArrayView3<f64>, out: (usize, usize)) -> Result<SaliencyMap> {
    let weights = gradcam_pp_weights(a, g)?;
    let (_, h, w) = a.dim();
    if h == 0 || w == 0 || out.0 == 0 || out.1 == 0 {
        return Err(Error::Shape("empty saliency map".into()));
    }
    let mut cam = Array2::<f64>::zeros((h, w));
    for (ak, wk) in a.outer_iter().zip(&weights) {
        cam.scaled_add(*wk, &ak);
    }
    cam.mapv_inplace(|v| v.max(0.0));
    if cam.iter().all(|&v| v == 0.0) {
        return Ok(SaliencyMap {
            values: Array2::zeros(out),
            flat: true,
        });
    }
    Ok(min_max_normalize(bilinear_resize(cam.view(), out)))
}

/// Whether the top-`q%` pixels of `map` touch `mask`, for every `q` on
/// `90..=100`. Pixels are kept when strictly above the value at rank
/// `⌊q/100·(M−1)⌋`; at `q = 100` the maximal pixels are kept.
pub fn overlap_indicators(map: &SaliencyMap, mask: ArrayView2<bool>) -> Result<Vec<bool>> {
    if map.values.dim() != mask.dim() {
        return Err(Error::Shape(format!("map {:?} vs mask {:?}", map.values.dim(), mask.dim())));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::InvalidInput("empty reference mask".into()));
    }
    let grid = MIN_PERCENTILE..=MAX_PERCENTILE;
    if map.flat {
        return Ok(grid.map(|_| false).collect());
    }
    let mut sorted: Vec<f64> = map.values.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let max = sorted[m - 1];
    Ok(grid
        .map(|q| {
            let hit = |keep: &dyn Fn(f64) -> bool| map.values.iter().zip(mask.iter()).any(|(&v, &y)| y && keep(v));
            if q == MAX_PERCENTILE {
                hit(&|v| v == max)
            } else {
                let t = sorted[q * (m - 1) / 100];
                hit(&|v| v > t)
            }
        })
        .collect())
}

/// Mean overlap indicator over the percentile grid.
pub fn concordance_score(map: &SaliencyMap, mask: ArrayView2<bool>) -> Result<f64> {
    let hits = overlap_indicators(map, mask)?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleConcordance {
    pub sample: usize,
    pub score: f64,
    pub flat: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcordanceReport {
    pub samples: Vec<SampleConcordance>,
    /// Mean over the evaluated samples.
    pub mean: f64,
}

/// Saliency maps for every sample, at mask resolution.
pub fn saliency_maps(telemetry: &SaliencyTelemetry) -> Result<Vec<SaliencyMap>> {
    let (_, h, w) = telemetry.masks.dim();
    (0..telemetry.activations.len_of(Axis(0)))
        .into_par_iter()
        .map(|i| {
            gradcam_pp(
                telemetry.activations.index_axis(Axis(0), i),
                telemetry.gradients.index_axis(Axis(0), i),
                (h, w),
            )
        })
        .collect()
}

/// Concordance over the samples labelled `positive_class`.
pub fn dataset_concordance(telemetry: &SaliencyTelemetry, labels: &LabelSet, positive_class: usize) -> Result<ConcordanceReport> {
    let ids: Vec<usize> = (0..labels.len()).filter(|&i| labels.as_slice()[i] == positive_class).collect();
    if ids.is_empty() {
        return Err(Error::InsufficientData(format!("no samples of class {positive_class}")));
    }
    let (_, h, w) = telemetry.masks.dim();
    let samples: Vec<SampleConcordance> = ids
        .par_iter()
        .map(|&i| {
            let map = gradcam_pp(
                telemetry.activations.index_axis(Axis(0), i),
                telemetry.gradients.index_axis(Axis(0), i),
                (h, w),
            )?;
            let score = concordance_score(&map, telemetry.masks.index_axis(Axis(0), i)).map_err(|e| match e {
                Error::InvalidInput(_) => Error::InvalidInput(format!("empty reference mask for sample {i}")),
                other => other,
            })?;
            Ok(SampleConcordance {
                sample: i,
                score,
                flat: map.flat,
            })
        })
        .collect::<Result<_>>()?;
    let mean = samples.iter().map(|s| s.score).sum::<f64>() / samples.len() as f64;
    Ok(ConcordanceReport { samples, mean })
}
