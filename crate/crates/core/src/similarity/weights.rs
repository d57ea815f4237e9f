use ndarray::{s, Array4, Axis};

use crate::{Error, Result};

/// Anisotropic total variation of each output kernel of a
/// `K_out × k × k × C_in` bank.
pub fn kernel_total_variation(kernels: &Array4<f64>) -> Vec<f64> {
    kernels
        .axis_iter(Axis(0))
        .map(|kern| {
            let horizontal = &kern.slice(s![.., 1.., ..]) - &kern.slice(s![.., ..-1, ..]);
            let vertical = &kern.slice(s![1.., .., ..]) - &kern.slice(s![..-1, .., ..]);
            horizontal.iter().map(|v| v.abs()).sum::<f64>() + vertical.iter().map(|v| v.abs()).sum::<f64>()
        })
        .collect()
}

/// Frobenius norm of the change between consecutive weight snapshots.
pub fn weight_displacement(snapshots: &[Vec<f64>]) -> Result<Vec<f64>> {
    if let Some(first) = snapshots.first() {
        if let Some(bad) = snapshots.iter().find(|w| w.len() != first.len()) {
            return Err(Error::Shape(format!(
                "weight snapshots differ in length: {} vs {}",
                first.len(),
                bad.len()
            )));
        }
    }
    Ok(snapshots
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .collect())
}
