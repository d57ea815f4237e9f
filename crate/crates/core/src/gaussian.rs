//! Class-conditional Gaussian models fitted on training features.
//!
//! Shared by hardness (Mahalanobis prototypicality) and uncertainty
//! (Mahalanobis and GDA estimators). Every covariance is shrunk toward its
//! diagonal by [`SHRINKAGE`](crate::linalg::SHRINKAGE) and ridged by
//! [`RIDGE`](crate::linalg::RIDGE) before factorization.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::linalg::{covariance_about, shrink, SpdFactor, RIDGE, SHRINKAGE};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct ClassGaussians {
    /// `None` for classes without training samples.
    means: Vec<Option<Array1<f64>>>,
    shared: SpdFactor,
    per_class: Option<Vec<Option<SpdFactor>>>,
}

impl ClassGaussians {
    /// Fits class means and the pooled within-class covariance. With
    /// `per_class`, also fits one covariance per class.
    pub fn fit(features: ArrayView2<f64>, labels: &[usize], num_classes: usize, per_class: bool) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows vs {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.nrows() == 0 {
            return Err(Error::InsufficientData("no training samples".into()));
        }
        let dim = features.ncols();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
        for (i, &y) in labels.iter().enumerate() {
            if y >= num_classes {
                return Err(Error::InvalidInput(format!("label {y} out of range for {num_classes} classes")));
            }
            members[y].push(i);
        }
        let mut means = Vec::with_capacity(num_classes);
        let mut pooled = Array2::<f64>::zeros((dim, dim));
        let mut class_covs = Vec::with_capacity(num_classes);
        for rows in &members {
            if rows.is_empty() {
                means.push(None);
                class_covs.push(None);
                continue;
            }
            let x = features.select(ndarray::Axis(0), rows);
            let mu = crate::linalg::column_means(x.view());
            let cov = covariance_about(x.view(), mu.view());
            pooled = pooled + &cov * rows.len() as f64;
            class_covs.push(Some(cov));
            means.push(Some(mu));
        }
        pooled /= features.nrows() as f64;
        let shared = SpdFactor::new(&shrink(&pooled, SHRINKAGE, RIDGE))?;
        let per_class = if per_class {
            let mut out = Vec::with_capacity(num_classes);
            for cov in class_covs {
                out.push(match cov {
                    Some(c) => Some(SpdFactor::new(&shrink(&c, SHRINKAGE, RIDGE))?),
                    None => None,
                });
            }
            Some(out)
        } else {
            None
        };
        Ok(Self { means, shared, per_class })
    }

    /// Builds a model from explicit means and an explicit shared covariance
    /// (no shrinkage applied).
    pub fn from_parts(means: Vec<Array1<f64>>, shared_cov: &Array2<f64>) -> Result<Self> {
        Ok(Self {
            means: means.into_iter().map(Some).collect(),
            shared: SpdFactor::new(shared_cov)?,
            per_class: None,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.means.len()
    }

    pub fn mean(&self, class: usize) -> Option<&Array1<f64>> {
        self.means[class].as_ref()
    }

    /// Shared-covariance Mahalanobis distance to each fitted class mean.
    pub fn mahalanobis(&self, x: ArrayView1<f64>) -> Vec<Option<f64>> {
        self.means
            .iter()
            .map(|m| m.as_ref().map(|mu| self.shared.quad_form((&x - mu).view()).max(0.0).sqrt()))
            .collect()
    }

    /// Distance to the nearest class mean.
    pub fn min_mahalanobis(&self, x: ArrayView1<f64>) -> f64 {
        self.mahalanobis(x)
            .into_iter()
            .flatten()
            .fold(f64::INFINITY, f64::min)
    }

    /// Maximum class-conditional log-density under per-class covariances.
    /// Falls back to the shared covariance when per-class factors were not fitted.
    pub fn max_log_likelihood(&self, x: ArrayView1<f64>) -> f64 {
        let d = x.len() as f64;
        let mut best = f64::NEG_INFINITY;
        for (c, mu) in self.means.iter().enumerate() {
            let Some(mu) = mu else { continue };
            let factor = match &self.per_class {
                Some(f) => f[c].as_ref().unwrap_or(&self.shared),
                None => &self.shared,
            };
            let q = factor.quad_form((&x - mu).view());
            let ll = -0.5 * (q + factor.log_det() + d * (2.0 * PI).ln());
            best = best.max(ll);
        }
        best
    }
}
