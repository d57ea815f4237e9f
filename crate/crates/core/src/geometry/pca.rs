use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::linalg::{column_means, covariance_about, symmetric_eigen};
use crate::{Error, Result};

/// Principal components of per-pixel spectra, followed by per-component
/// standardization of the projected values.
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    /// `components × channels`, rows are unit-norm principal axes.
    pub components: Array2<f64>,
    /// Variance of each retained component.
    pub variances: Vec<f64>,
    /// Fraction of total variance captured by the retained components.
    pub explained: f64,
    /// Standard deviation used to re-standardize each component; axes
    /// with no variance are left unscaled.
    pub scale: Vec<f64>,
}

impl PcaModel {
    /// Fits on the pixels (rows) whose Euclidean magnitude exceeds
    /// `background_threshold`.
    pub fn fit(pixels: ArrayView2<f64>, components: usize, background_threshold: f64) -> Result<Self> {
        let channels = pixels.ncols();
        if components == 0 || components > channels {
            return Err(Error::InvalidInput(format!(
                "{components} components requested from {channels} channels"
            )));
        }
        let keep: Vec<usize> = pixels
            .outer_iter()
            .enumerate()
            .filter(|(_, p)| p.dot(p).sqrt() > background_threshold)
            .map(|(i, _)| i)
            .collect();
        if keep.len() <= channels {
            return Err(Error::InsufficientData(format!(
                "{} foreground pixels for {channels} channels",
                keep.len()
            )));
        }
        let fg = pixels.select(Axis(0), &keep);
        let mean = column_means(fg.view());
        let cov = covariance_about(fg.view(), mean.view());
        let (values, vectors) = symmetric_eigen(&cov);
        let total: f64 = cov.diag().sum();
        if total <= 0.0 {
            return Err(Error::InsufficientData("foreground pixels have no variance".into()));
        }
        let variances: Vec<f64> = values[..components].iter().map(|v| v.max(0.0)).collect();
        let explained = (variances.iter().sum::<f64>() / total).min(1.0);
        let comps = vectors.slice(ndarray::s![.., ..components]).t().to_owned();
        let scale = variances
            .iter()
            .map(|&v| if v > 1e-12 * total { v.sqrt() } else { 1.0 })
            .collect();
        Ok(Self {
            mean,
            components: comps,
            variances,
            explained,
            scale,
        })
    }

    /// Coordinates on the principal axes, before standardization.
    pub fn project(&self, pixels: ArrayView2<f64>) -> Array2<f64> {
        (&pixels - &self.mean).dot(&self.components.t())
    }

    pub fn reconstruct(&self, projected: ArrayView2<f64>) -> Array2<f64> {
        projected.dot(&self.components) + &self.mean
    }

    /// Projection followed by per-component standardization.
    pub fn transform(&self, pixels: ArrayView2<f64>) -> Array2<f64> {
        let mut out = self.project(pixels);
        for (mut col, s) in out.axis_iter_mut(Axis(1)).zip(&self.scale) {
            col /= *s;
        }
        out
    }
}

/// Fits on the foreground of `pixels` and returns the model with the
/// standardized reduction of every pixel.
pub fn pca_channel_reduce(
    pixels: ArrayView2<f64>,
    components: usize,
    background_threshold: f64,
) -> Result<(PcaModel, Array2<f64>)> {
    let model = PcaModel::fit(pixels, components, background_threshold)?;
    let reduced = model.transform(pixels);
    Ok((model, reduced))
}
