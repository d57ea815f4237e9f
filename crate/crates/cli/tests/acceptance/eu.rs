use cuelens_core::numeric::Direction;
use cuelens_core::synth::gen_gaussian_classes;
use cuelens_core::uncertainty::{eu_scores, Estimator, TrainStats};
use ndarray::{concatenate, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Checks, Verdict};

/// Rank-sum AUROC with half credit for ties, by pair counting.
fn auroc_oracle(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &a) in scores.iter().enumerate() {
        if !positive[i] {
            continue;
        }
        for (j, &b) in scores.iter().enumerate() {
            if positive[j] {
                continue;
            }
            pairs += 1.0;
            wins += if a > b {
                1.0
            } else if a == b {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / pairs
}

fn expected_direction(e: Estimator) -> Direction {
    match e {
        Estimator::EnergyAsh | Estimator::Mahalanobis | Estimator::Knn | Estimator::NnGuide | Estimator::Vim => Direction::Up,
        Estimator::Dml | Estimator::RpGradNorm | Estimator::Gda | Estimator::Cosine => Direction::Down,
    }
}

pub fn run() -> Verdict {
    let (classes, dim) = (3, 16);
    let train = gen_gaussian_classes(classes, dim, 50.0, 600, 0, 1).unwrap();
    let test = gen_gaussian_classes(classes, dim, 50.0, 300, 300, 2).unwrap();
    let head = train.head.clone();
    let logits_of = |f: &Array2<f64>| f.dot(&head.weight.t()) + &head.bias;

    let stats = TrainStats::fit(
        train.features.view(),
        logits_of(&train.features).view(),
        &train.labels,
        classes,
        Some(head.clone()),
        Some(vec![1.0 / classes as f64; classes]),
    )
    .unwrap();
    let eval = concatenate(Axis(0), &[test.features.view(), test.ood.view()]).unwrap();
    let eval_logits = logits_of(&eval);
    let is_ood: Vec<bool> = (0..eval.nrows()).map(|i| i >= test.features.nrows()).collect();
    let report = eu_scores(&stats, eval.view(), eval_logits.view()).unwrap();

    let mut checks = Checks::default();
    checks.check(format!("{} of 9 estimators ran", report.scores.len()), report.scores.len() == 9);
    for s in &report.scores {
        let flag_ok = s.direction == expected_direction(s.estimator);
        let raw = auroc_oracle(&s.values, &is_ood);
        let oriented = match s.direction {
            Direction::Up => raw,
            Direction::Down => 1.0 - raw,
        };
        checks.check(
            format!("{} auroc {oriented:.3} ({:?})", s.estimator.name(), s.direction),
            flag_ok && oriented > 0.9,
        );
    }

    let mut r = ChaCha8Rng::seed_from_u64(5);
    let (mut energy_ok, mut gradnorm_ok) = (true, true);
    let mut shifted = stats.clone();
    for _ in 0..500 {
        let i = r.random_range(0..eval.nrows());
        let c: f64 = r.random_range(-25.0..25.0);
        let f = eval.row(i);
        let z = eval_logits.row(i).to_owned();
        let g0 = stats.score(Estimator::RpGradNorm, f, z.view());
        let g1 = stats.score(Estimator::RpGradNorm, f, (&z + c).view());
        gradnorm_ok &= (g0 - g1).abs() <= 1e-12 * g0.abs().max(1.0);

        shifted.head.as_mut().unwrap().bias = &head.bias + c;
        let e0 = stats.score(Estimator::EnergyAsh, f, z.view());
        let e1 = shifted.score(Estimator::EnergyAsh, f, (&z + c).view());
        energy_ok &= (e1 - (e0 - c)).abs() <= 1e-12 * e0.abs().max(1.0);
    }
    checks.check("energy shifts by -c", energy_ok);
    checks.check("gradnorm shift-invariant", gradnorm_ok);
    checks.verdict()
}
