use cuelens_core::numeric::{argmax, softmax, Direction};
use cuelens_core::uncertainty::{
    classification_metrics, eu_scores, smooth_ece, AbstentionCurve, Bandwidth, CalibrationInput, ClassificationMetrics,
    Estimator, SmoothEce, TrainStats,
};
use ndarray::Axis;
use serde::Serialize;

use super::{load, Outcome};
use crate::cli::{EstimatorArg, UqArgs};
use crate::error::{CliError, CliResult};
use crate::output::{num, Output};

#[derive(Serialize)]
struct EstimatorSummary {
    estimator: &'static str,
    direction: Direction,
    alignment_score: Option<f64>,
    curve: AbstentionCurve,
}

#[derive(Serialize)]
struct Skipped {
    estimator: &'static str,
    reason: String,
}

#[derive(Serialize)]
struct Summary {
    train_samples: usize,
    test_samples: usize,
    calibration: SmoothEce,
    classification: ClassificationMetrics,
    estimators: Vec<EstimatorSummary>,
    skipped: Vec<Skipped>,
}

fn parse_bandwidth(s: &str) -> CliResult<Bandwidth> {
    if s == "auto" {
        return Ok(Bandwidth::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(Bandwidth::Fixed(v)),
        _ => Err(CliError::Validation(format!("bandwidth must be `auto` or a positive number, got `{s}`"))),
    }
}

fn selected(args: &[EstimatorArg]) -> Vec<Estimator> {
    if args.iter().any(|a| matches!(a, EstimatorArg::All)) {
        return Estimator::ALL.to_vec();
    }
    let mut out: Vec<Estimator> = args
        .iter()
        .map(|a| match a {
            EstimatorArg::EnergyAsh => Estimator::EnergyAsh,
            EstimatorArg::Dml => Estimator::Dml,
            EstimatorArg::RpGradNorm => Estimator::RpGradNorm,
            EstimatorArg::Mahalanobis => Estimator::Mahalanobis,
            EstimatorArg::Gda => Estimator::Gda,
            EstimatorArg::Knn => Estimator::Knn,
            EstimatorArg::Cosine => Estimator::Cosine,
            EstimatorArg::NnGuide => Estimator::NnGuide,
            EstimatorArg::Vim | EstimatorArg::All => Estimator::Vim,
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

pub fn run(args: &UqArgs) -> CliResult<Outcome> {
    let bandwidth = parse_bandwidth(&args.bandwidth)?;
    let wanted = selected(&args.estimators);
    let run = load(&args.run)?;
    let features = run.final_features().ok_or_else(|| CliError::missing("features"))?;
    let logits = run.trace.last();
    let labels = run.labels.as_slice();
    let train = run.train_indices();
    let test = run.test_indices();
    let take = |ids: &[usize]| -> Vec<usize> { ids.iter().map(|&i| labels[i]).collect() };

    let stats = TrainStats::fit(
        features.select(Axis(0), &train).view(),
        logits.select(Axis(0), &train).view(),
        &take(&train),
        run.num_classes(),
        run.head.clone(),
        Some(run.manifest.class_prior.clone()),
    )?;
    let test_logits = logits.select(Axis(0), &test);
    let test_labels = take(&test);
    let report = eu_scores(&stats, features.select(Axis(0), &test).view(), test_logits.view())?;

    let mut confidence = Vec::with_capacity(test.len());
    let mut correct = Vec::with_capacity(test.len());
    for (row, &y) in test_logits.outer_iter().zip(&test_labels) {
        let z = row.to_vec();
        confidence.push(softmax(&z).into_iter().fold(0.0, f64::max));
        correct.push(argmax(&z) == y);
    }
    let input = CalibrationInput::new(confidence, correct)?;
    let calibration = smooth_ece(&input, bandwidth)?;
    let classification = classification_metrics(test_logits.view(), &test_labels, args.positive_class)?;

    let scores: Vec<_> = report.scores.iter().filter(|s| wanted.contains(&s.estimator)).collect();
    let mut estimators = Vec::with_capacity(scores.len());
    for s in &scores {
        let curve = s.alignment(&input)?;
        estimators.push(EstimatorSummary {
            estimator: s.estimator.name(),
            direction: s.direction,
            alignment_score: curve.score,
            curve,
        });
    }

    let out = Output::create(&args.run.out, "uq", args)?;
    let mut header = vec!["sample", "label", "confidence", "correct"];
    header.extend(scores.iter().map(|s| s.estimator.name()));
    out.csv(
        "eu_scores.csv",
        &header,
        test.iter().enumerate().map(|(r, &i)| {
            let mut row = vec![
                i.to_string(),
                labels[i].to_string(),
                num(input.confidence[r]),
                u8::from(input.correct[r]).to_string(),
            ];
            row.extend(scores.iter().map(|s| num(s.values[r])));
            row
        }),
    )?;
    out.csv(
        "abstention.csv",
        &["estimator", "q", "ece", "ratio"],
        estimators.iter().flat_map(|e| {
            (0..e.curve.q.len()).map(move |j| {
                vec![
                    e.estimator.to_string(),
                    e.curve.q[j].to_string(),
                    num(e.curve.ece[j]),
                    e.curve.ratio.get(j).copied().map(num).unwrap_or_default(),
                ]
            })
        }),
    )?;

    let mut outcome = Outcome::default();
    outcome.flag(
        estimators.iter().any(|e| e.curve.degenerate),
        "baseline calibration error vanishes, alignment scores undefined",
    );
    let summary = Summary {
        train_samples: train.len(),
        test_samples: test.len(),
        calibration,
        classification,
        estimators,
        skipped: report
            .skipped
            .into_iter()
            .filter(|(e, _)| wanted.contains(e))
            .map(|(e, reason)| Skipped {
                estimator: e.name(),
                reason,
            })
            .collect(),
    };
    out.json("uq.json", &summary)?;
    Ok(outcome)
}
