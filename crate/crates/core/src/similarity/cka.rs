use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::rng;
use crate::{Error, Result};

pub const DEFAULT_MINIBATCH: usize = 256;
/// Smallest batch the unbiased estimator is defined on.
pub const MIN_BATCH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CkaResult {
    pub value: f64,
    pub degenerate: bool,
}

/// Disjoint blocks of a seeded shuffle of `0..n`. A trailing block shorter
/// than [`MIN_BATCH`] is dropped; `n ≤ minibatch` yields one block in
/// natural order.
pub fn batch_partition(n: usize, minibatch: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut ids: Vec<usize> = (0..n).collect();
    if n <= minibatch {
        return if n >= MIN_BATCH { vec![ids] } else { Vec::new() };
    }
    ids.shuffle(&mut rng::stream(seed, "cka-batches", n as u64));
    ids.chunks(minibatch).filter(|c| c.len() >= MIN_BATCH).map(<[usize]>::to_vec).collect()
}

/// Linear Gram matrix with its diagonal zeroed, plus the row sums and the
/// total sum the unbiased estimator needs.
struct CenteredGram {
    k: Array2<f64>,
    row_sums: Array1<f64>,
    total: f64,
}

impl CenteredGram {
    fn new(z: ArrayView2<f64>) -> Self {
        let mut k = z.dot(&z.t());
        k.diag_mut().fill(0.0);
        let row_sums = k.sum_axis(Axis(1));
        let total = row_sums.sum();
        Self { k, row_sums, total }
    }
}

fn hsic_terms(a: &CenteredGram, b: &CenteredGram) -> f64 {
    let n = a.k.nrows() as f64;
    let trace: f64 = a.k.iter().zip(b.k.iter()).map(|(x, y)| x * y).sum();
    let cross = a.row_sums.dot(&b.row_sums);
    (trace + a.total * b.total / ((n - 1.0) * (n - 2.0)) - 2.0 / (n - 2.0) * cross) / (n * (n - 3.0))
}

/// Unbiased HSIC between two kernel matrices (diagonals are ignored).
pub fn unbiased_hsic(k: &Array2<f64>, l: &Array2<f64>) -> Result<f64> {
    let n = k.nrows();
    if k.dim() != (n, n) || l.dim() != (n, n) {
        return Err(Error::Shape(format!("hsic needs matching square kernels, got {:?} and {:?}", k.dim(), l.dim())));
    }
    if n < MIN_BATCH {
        return Err(Error::InsufficientData(format!("hsic needs at least {MIN_BATCH} samples, got {n}")));
    }
    let prep = |m: &Array2<f64>| {
        let mut k = m.clone();
        k.diag_mut().fill(0.0);
        let row_sums = k.sum_axis(Axis(1));
        let total = row_sums.sum();
        CenteredGram { k, row_sums, total }
    };
    Ok(hsic_terms(&prep(k), &prep(l)))
}

/// Per-batch Gram matrices of one representation.
struct BatchedGrams {
    grams: Vec<CenteredGram>,
    self_hsic: f64,
}

impl BatchedGrams {
    fn new(z: ArrayView2<f64>, batches: &[Vec<usize>]) -> Self {
        let grams: Vec<CenteredGram> = batches.iter().map(|b| CenteredGram::new(z.select(Axis(0), b).view())).collect();
        let self_hsic = grams.iter().map(|g| hsic_terms(g, g)).sum::<f64>() / grams.len() as f64;
        Self { grams, self_hsic }
    }

    fn cka_with(&self, other: &BatchedGrams) -> CkaResult {
        let cross = self.grams.iter().zip(&other.grams).map(|(a, b)| hsic_terms(a, b)).sum::<f64>() / self.grams.len() as f64;
        let denom = self.self_hsic * other.self_hsic;
        if !(denom > 0.0) || !denom.is_finite() {
            return CkaResult {
                value: 0.0,
                degenerate: true,
            };
        }
        CkaResult {
            value: (cross / denom.sqrt()).clamp(0.0, 1.0),
            degenerate: false,
        }
    }
}

fn check_rows(layers: &[ArrayView2<f64>]) -> Result<usize> {
    let n = layers.first().map_or(0, |z| z.nrows());
    if let Some(z) = layers.iter().find(|z| z.nrows() != n) {
        return Err(Error::Shape(format!("cka inputs disagree on sample count: {n} vs {}", z.nrows())));
    }
    if n < MIN_BATCH {
        return Err(Error::InsufficientData(format!("cka needs at least {MIN_BATCH} samples, got {n}")));
    }
    Ok(n)
}

/// Minibatch linear CKA: each HSIC term is averaged over the batches
/// before the ratio is taken.
pub fn cka(zi: ArrayView2<f64>, zj: ArrayView2<f64>, minibatch: usize, seed: u64) -> Result<CkaResult> {
    let n = check_rows(&[zi, zj])?;
    let batches = batch_partition(n, minibatch, seed);
    Ok(BatchedGrams::new(zi, &batches).cka_with(&BatchedGrams::new(zj, &batches)))
}

#[derive(Debug, Clone)]
pub struct CkaMatrix {
    pub values: Array2<f64>,
    /// Pairs whose denominator vanished.
    pub degenerate: Vec<(usize, usize)>,
}

/// Intra-run CKA over every pair of layers. Symmetric with unit diagonal
/// for layers that carry variance.
pub fn cka_matrix(layers: &[ArrayView2<f64>], minibatch: usize, seed: u64) -> Result<CkaMatrix> {
    let n = check_rows(layers)?;
    let batches = batch_partition(n, minibatch, seed);
    let grams: Vec<BatchedGrams> = layers.par_iter().map(|z| BatchedGrams::new(*z, &batches)).collect();
    let l = layers.len();
    let pairs: Vec<(usize, usize)> = (0..l).flat_map(|i| (i + 1..l).map(move |j| (i, j))).collect();
    let results: Vec<CkaResult> = pairs.par_iter().map(|&(i, j)| grams[i].cka_with(&grams[j])).collect();
    let mut values = Array2::zeros((l, l));
    let mut degenerate = Vec::new();
    for (i, g) in grams.iter().enumerate() {
        if g.self_hsic > 0.0 {
            values[[i, i]] = 1.0;
        } else {
            degenerate.push((i, i));
        }
    }
    for (&(i, j), r) in pairs.iter().zip(&results) {
        values[[i, j]] = r.value;
        values[[j, i]] = r.value;
        if r.degenerate {
            degenerate.push((i, j));
        }
    }
    Ok(CkaMatrix { values, degenerate })
}

/// CKA between every layer of one run and every layer of another, over
/// the same samples.
pub fn cka_cross(a: &[ArrayView2<f64>], b: &[ArrayView2<f64>], minibatch: usize, seed: u64) -> Result<CkaMatrix> {
    let all: Vec<ArrayView2<f64>> = a.iter().chain(b).copied().collect();
    let n = check_rows(&all)?;
    let batches = batch_partition(n, minibatch, seed);
    let ga: Vec<BatchedGrams> = a.par_iter().map(|z| BatchedGrams::new(*z, &batches)).collect();
    let gb: Vec<BatchedGrams> = b.par_iter().map(|z| BatchedGrams::new(*z, &batches)).collect();
    let results: Vec<Vec<CkaResult>> = ga.par_iter().map(|x| gb.iter().map(|y| x.cka_with(y)).collect()).collect();
    let mut values = Array2::zeros((a.len(), b.len()));
    let mut degenerate = Vec::new();
    for (i, row) in results.iter().enumerate() {
        for (j, r) in row.iter().enumerate() {
            values[[i, j]] = r.value;
            if r.degenerate {
                degenerate.push((i, j));
            }
        }
    }
    Ok(CkaMatrix { values, degenerate })
}
