use cuelens_core::hardness::{composite, dynamics_metrics};
use cuelens_core::synth::gen_training_dynamics;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Verdict;

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (i, &x) in v.iter().enumerate() {
        let below = v.iter().filter(|&&y| y < x).count() as f64;
        let equal = v.iter().filter(|&&y| y == x).count() as f64;
        out[i] = below + (equal + 1.0) / 2.0;
    }
    out
}

fn spearman_oracle(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn run() -> Verdict {
    let (n, t) = (2000, 10);
    let mut worst = f64::INFINITY;
    for seed in 0..3 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let learn: Vec<usize> = (0..n).map(|_| r.random_range(1..=t + 1)).collect();
        let (trace, labels) = gen_training_dynamics(&learn, t, 2, 0.05, seed).unwrap();
        let profile = composite(&dynamics_metrics(&trace, &labels).unwrap()).unwrap();
        let planted: Vec<f64> = learn.iter().map(|&l| l as f64).collect();
        worst = worst.min(spearman_oracle(&profile.composite, &planted));
    }
    Verdict::new(worst > 0.9, format!("min spearman over 3 seeds {worst:.4}"))
}
