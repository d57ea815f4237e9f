use std::f64::consts::PI;

use cuelens_core::perturb::{suppress_band, FrequencyBand, BAND_CENTERS};
use ndarray::{Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Checks, Verdict};

fn energy(a: &Array3<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}

/// Energy of the four radius-1 Fourier coefficients of one channel, by a
/// direct DFT sum; those lie below the lowest band edge.
fn radius_one_energy(img: &Array3<f64>, ch: usize) -> f64 {
    let n = img.dim().0;
    let lane = img.index_axis(Axis(2), ch);
    let mut total = 0.0;
    for (ky, kx) in [(0i64, 1i64), (0, -1), (1, 0), (-1, 0)] {
        let (mut re, mut im) = (0.0, 0.0);
        for y in 0..n {
            for x in 0..n {
                let phase = -2.0 * PI * (ky * y as i64 + kx * x as i64) as f64 / n as f64;
                re += lane[[y, x]] * phase.cos();
                im += lane[[y, x]] * phase.sin();
            }
        }
        total += re * re + im * im;
    }
    total / (n * n) as f64
}

fn non_dc_energy(img: &Array3<f64>) -> f64 {
    let (h, w, c) = img.dim();
    (0..c)
        .map(|ch| {
            let lane = img.index_axis(Axis(2), ch);
            let mean = lane.sum() / (h * w) as f64;
            lane.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        })
        .sum()
}

fn bands() -> Vec<FrequencyBand> {
    BAND_CENTERS.iter().map(|&c| FrequencyBand::octave(c).unwrap()).collect()
}

pub fn run() -> Verdict {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    let mut checks = Checks::default();

    // sides whose corner frequency stays below the top band edge
    let mut worst = 0.0f64;
    for side in [32usize, 64, 100] {
        let img = Array3::from_shape_fn((side, side, 2), |_| r.sample::<f64, _>(StandardNormal));
        let removed: f64 = bands().iter().map(|&b| energy(&(&img - &suppress_band(&img, b).unwrap()))).sum();
        let expected = non_dc_energy(&img) - (0..2).map(|ch| radius_one_energy(&img, ch)).sum::<f64>();
        worst = worst.max((removed - expected).abs() / expected);
    }
    checks.check(format!("parseval tiling (rel err {worst:.1e})"), worst < 1e-6);

    let n = 256;
    let mut worst = 0.0f64;
    for band in bands() {
        for _ in 0..3 {
            let (fy, fx) = loop {
                let fy = r.random_range(-127i64..=127);
                let fx = r.random_range(-127i64..=127);
                if band.contains((fy as f64).hypot(fx as f64)) {
                    break (fy, fx);
                }
            };
            let phase = r.random_range(0.0..2.0 * PI);
            let tone = Array3::from_shape_fn((n, n, 1), |(y, x, _)| {
                (2.0 * PI * (fy * y as i64 + fx * x as i64) as f64 / n as f64 + phase).cos()
            });
            let out = suppress_band(&tone, band).unwrap();
            worst = worst.max(out.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
    }
    checks.check(format!("tone suppression (max residual {worst:.1e})"), worst < 1e-6);

    let img = Array3::from_shape_fn((128, 128, 3), |_| r.sample::<f64, _>(StandardNormal));
    let mut worst = 0.0f64;
    for band in bands() {
        let once = suppress_band(&img, band).unwrap();
        let twice = suppress_band(&once, band).unwrap();
        worst = worst.max((&twice - &once).iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    checks.check(format!("idempotence (max diff {worst:.1e})"), worst < 1e-6);
    checks.verdict()
}
