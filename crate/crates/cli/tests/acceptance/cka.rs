use cuelens_core::similarity::{cka, cka_matrix, DEFAULT_MINIBATCH};
use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Checks, Verdict};

fn gaussian(r: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| StandardNormal.sample(r))
}

fn rotation(r: &mut ChaCha8Rng, d: usize) -> Array2<f64> {
    let q = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(r)).qr().q();
    Array2::from_shape_fn((d, d), |(i, j)| q[(i, j)])
}

pub fn run() -> Verdict {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let mut checks = Checks::default();
    let mb = DEFAULT_MINIBATCH;

    let z = gaussian(&mut r, 512, 24);
    let same = cka(z.view(), z.view(), mb, 1).unwrap().value;
    checks.check(format!("identity {same:.9}"), (same - 1.0).abs() < 1e-9);

    let mut worst = 0.0f64;
    for (n, d) in [(512, 24), (1000, 10), (200, 40)] {
        let z = gaussian(&mut r, n, d);
        let w = gaussian(&mut r, n, d / 2).mapv(|v| v * 0.3) + z.dot(&gaussian(&mut r, d, d / 2));
        let zr = z.dot(&rotation(&mut r, d)).mapv(|v| v * 3.7);
        let a = cka(z.view(), w.view(), mb, 9).unwrap().value;
        let b = cka(zr.view(), w.view(), mb, 9).unwrap().value;
        worst = worst.max((a - b).abs());
        let self_rot = cka(z.view(), zr.view(), mb, 9).unwrap().value;
        worst = worst.max((self_rot - 1.0).abs());
    }
    checks.check(format!("rotation+scale invariance (max diff {worst:.1e})"), worst < 1e-6);

    let mut largest = 0.0f64;
    for seed in 0..5 {
        let mut s = ChaCha8Rng::seed_from_u64(100 + seed);
        let (a, b) = (gaussian(&mut s, 512, 32), gaussian(&mut s, 512, 32));
        largest = largest.max(cka(a.view(), b.view(), mb, seed).unwrap().value);
    }
    checks.check(format!("independent null max {largest:.4}"), largest < 0.05);

    let base = gaussian(&mut r, 600, 12);
    let layers: Vec<Array2<f64>> = (0..4)
        .map(|l| base.dot(&gaussian(&mut r, 12, 8 + 4 * l)) + gaussian(&mut r, 600, 8 + 4 * l).mapv(|v| v * l as f64))
        .collect();
    let views: Vec<ArrayView2<f64>> = layers.iter().map(|l| l.view()).collect();
    let m = cka_matrix(&views, mb, 4).unwrap().values;
    let symmetric = (0..4).all(|i| (0..4).all(|j| m[[i, j]] == m[[j, i]]));
    let unit_diag = (0..4).all(|i| (m[[i, i]] - 1.0).abs() < 1e-12);
    checks.check("matrix symmetric", symmetric);
    checks.check("matrix unit diagonal", unit_diag);
    checks.verdict()
}
