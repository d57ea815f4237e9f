use cuelens_core::hardness::{collect_metrics, composite, HardnessProfile};
use cuelens_core::telemetry::Run;
use serde::Serialize;

use super::{load, Outcome};
use crate::cli::HardnessArgs;
use crate::error::CliResult;
use crate::output::{num, Output};

#[derive(Serialize)]
struct MetricSummary<'a> {
    name: &'a str,
    direction: cuelens_core::numeric::Direction,
    degenerate: bool,
    min: f64,
    max: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    num_samples: usize,
    k: usize,
    metrics: Vec<MetricSummary<'a>>,
    mean_composite: f64,
    degenerate: bool,
}

pub(super) fn profile(run: &Run, k: usize) -> CliResult<HardnessProfile> {
    Ok(composite(&collect_metrics(run, k)?)?)
}

pub fn run(args: &HardnessArgs) -> CliResult<Outcome> {
    let run = load(&args.run)?;
    let profile = profile(&run, args.k)?;
    let out = Output::create(&args.run.out, "hardness", args)?;

    let mut header = vec!["sample".to_string(), "label".to_string()];
    for m in &profile.metrics {
        header.push(m.name.to_string());
        header.push(format!("{}_norm", m.name));
    }
    header.push("composite".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let labels = run.labels.as_slice();
    out.csv(
        "hardness.csv",
        &header,
        (0..run.num_samples()).map(|i| {
            let mut row = vec![i.to_string(), labels[i].to_string()];
            for m in &profile.metrics {
                row.push(num(m.raw[i]));
                row.push(num(m.normalized[i]));
            }
            row.push(num(profile.composite[i]));
            row
        }),
    )?;
    let n = profile.composite.len();
    let summary = Summary {
        num_samples: n,
        k: args.k,
        metrics: profile
            .metrics
            .iter()
            .map(|m| MetricSummary {
                name: m.name,
                direction: m.direction,
                degenerate: m.degenerate,
                min: m.raw.iter().copied().fold(f64::INFINITY, f64::min),
                max: m.raw.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
            .collect(),
        mean_composite: profile.composite.iter().sum::<f64>() / n as f64,
        degenerate: profile.degenerate,
    };
    out.json("hardness.json", &summary)?;

    let mut outcome = Outcome::default();
    outcome.flag(profile.degenerate, "every hardness metric is constant");
    Ok(outcome)
}
