use cuelens_core::synth::gen_calibrated_predictor;
use cuelens_core::uncertainty::{alignment_score, smooth_ece, Bandwidth, CalibrationInput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Checks, Verdict};

const AS_SAMPLES: usize = 20_000;

pub fn run() -> Verdict {
    let mut checks = Checks::default();

    let mut worst = 0.0f64;
    for seed in 0..3 {
        let input = gen_calibrated_predictor(100_000, 0.5, 1.0, |p| p, seed).unwrap();
        worst = worst.max(smooth_ece(&input, Bandwidth::Auto).unwrap().value);
    }
    checks.check(format!("calibrated smECE max {worst:.4}"), worst < 0.01);

    let n = 10_000;
    let constant = CalibrationInput::new(vec![1.0; n], (0..n).map(|i| i % 10 < 7).collect()).unwrap();
    let gap = smooth_ece(&constant, Bandwidth::Auto).unwrap().value;
    checks.check(format!("constant-confidence gap {gap:.4}"), (gap - 0.3).abs() <= 0.01);

    // overconfident predictor: reliability sits 0.3 below the confidence
    let input = gen_calibrated_predictor(AS_SAMPLES, 0.9, 1.0, |p| p - 0.3, 42).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(43);
    let random: Vec<f64> = (0..AS_SAMPLES).map(|_| r.random()).collect();
    let oracle: Vec<f64> = input
        .confidence
        .iter()
        .zip(&input.correct)
        .map(|(p, &c)| (f64::from(u8::from(c)) - p).abs())
        .collect();
    let inverted: Vec<f64> = oracle.iter().map(|v| -v).collect();
    let score = |eu: &[f64]| alignment_score(eu, &input).unwrap().score.unwrap_or(f64::NAN);
    let (s_random, s_oracle, s_inverted) = (score(&random), score(&oracle), score(&inverted));
    checks.check(format!("AS independent {s_random:.3}"), (s_random - 1.0).abs() <= 0.05);
    checks.check(format!("AS oracle {s_oracle:.3}"), s_oracle < 0.5);
    checks.check(format!("AS inverted oracle {s_inverted:.3}"), s_inverted > 1.0);
    checks.verdict()
}
