use cuelens_core::saliency::{dataset_concordance, saliency_maps};
use cuelens_core::telemetry::TensorFile;
use serde::Serialize;

use super::{load, Outcome};
use crate::cli::SaliencyArgs;
use crate::error::{CliError, CliResult};
use crate::output::{num, Output};

#[derive(Serialize)]
struct Summary {
    positive_class: usize,
    samples: usize,
    flat_maps: usize,
    mean_concordance: f64,
}

pub fn run(args: &SaliencyArgs) -> CliResult<Outcome> {
    let run = load(&args.run)?;
    let telemetry = run.saliency.as_ref().ok_or_else(|| CliError::missing("saliency"))?;
    if args.positive_class >= run.num_classes() {
        return Err(CliError::Validation(format!(
            "positive class {} out of range for {} classes",
            args.positive_class,
            run.num_classes()
        )));
    }
    let report = dataset_concordance(telemetry, &run.labels, args.positive_class)?;
    let maps = if args.write_maps { Some(saliency_maps(telemetry)?) } else { None };

    let out = Output::create(&args.run.out, "saliency", args)?;
    out.csv(
        "concordance.csv",
        &["sample", "score", "flat"],
        report
            .samples
            .iter()
            .map(|s| vec![s.sample.to_string(), num(s.score), s.flat.to_string()]),
    )?;
    if let Some(maps) = maps {
        let (n, h, w) = telemetry.masks.dim();
        let values = maps.iter().flat_map(|m| m.values.iter().copied());
        out.tensor("saliency_maps.spt", &TensorFile::from_f64(vec![n, h, w], values)?)?;
    }
    let flat = report.samples.iter().filter(|s| s.flat).count();
    let summary = Summary {
        positive_class: args.positive_class,
        samples: report.samples.len(),
        flat_maps: flat,
        mean_concordance: report.mean,
    };
    out.json("saliency.json", &summary)?;

    let mut outcome = Outcome::default();
    outcome.flag(flat == report.samples.len(), "every saliency map is flat");
    Ok(outcome)
}
