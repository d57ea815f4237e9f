//! Dense linear-algebra glue: covariance estimation, shrinkage, symmetric
//! eigendecomposition and Cholesky-based quadratic forms. Decompositions are
//! delegated to `nalgebra`; data lives in row-major `ndarray` buffers.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::{Error, Result};

/// Shrinkage weight toward the diagonal used by every Gaussian fit.
pub const SHRINKAGE: f64 = 0.05;
/// Ridge added after shrinkage.
pub const RIDGE: f64 = 1e-6;

pub fn to_dmatrix(a: &Array2<f64>) -> DMatrix<f64> {
    let (r, c) = a.dim();
    DMatrix::from_fn(r, c, |i, j| a[[i, j]])
}

pub fn from_dmatrix(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

pub fn column_means(x: ArrayView2<f64>) -> Array1<f64> {
    x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(x.ncols()))
}

/// Covariance of the rows of `x` about `center`, normalized by the row count.
pub fn covariance_about(x: ArrayView2<f64>, center: ArrayView1<f64>) -> Array2<f64> {
    let centered = &x - &center;
    let n = x.nrows().max(1) as f64;
    centered.t().dot(&centered) / n
}

/// `(1-λ)Σ + λ·diag(Σ) + εI`.
pub fn shrink(cov: &Array2<f64>, lambda: f64, ridge: f64) -> Array2<f64> {
    let mut out = cov * (1.0 - lambda);
    for i in 0..cov.nrows() {
        out[[i, i]] += lambda * cov[[i, i]] + ridge;
    }
    out
}

/// Eigenvalues in descending order with matching eigenvector columns.
pub fn symmetric_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let eig = nalgebra::SymmetricEigen::new(to_dmatrix(a));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Array2::from_shape_fn((a.nrows(), n), |(r, c)| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    lower: Array2<f64>,
    log_det: f64,
}

impl SpdFactor {
    pub fn new(a: &Array2<f64>) -> Result<Self> {
        let chol = nalgebra::Cholesky::new(to_dmatrix(a))
            .ok_or_else(|| Error::Singular(format!("{}x{} covariance is not positive definite", a.nrows(), a.ncols())))?;
        let lower = from_dmatrix(&chol.l());
        let log_det = 2.0 * lower.diag().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self { lower, log_det })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// `vᵀ A⁻¹ v` by forward substitution.
    pub fn quad_form(&self, v: ArrayView1<f64>) -> f64 {
        let n = self.dim();
        let mut y = vec![0.0; n];
        let mut acc = 0.0;
        for i in 0..n {
            let row = self.lower.row(i);
            let mut s = v[i];
            for j in 0..i {
                s -= row[j] * y[j];
            }
            y[i] = s / row[i];
            acc += y[i] * y[i];
        }
        acc
    }
}
