use cuelens_core::geometry::{id_2nn, id_lpca, id_mle, pca_channel_reduce, IdEstimate};
use ndarray::{Array2, ArrayView2};
use serde::Serialize;

use super::{load, Outcome};
use crate::cli::DimsArgs;
use crate::error::{CliError, CliResult};
use crate::output::{num, Output};

#[derive(Serialize)]
struct SourceEstimates {
    source: String,
    samples: usize,
    ambient_dim: usize,
    estimates: Vec<IdEstimate>,
}

#[derive(Serialize)]
struct PcaSummary {
    components: usize,
    threshold: f64,
    explained: f64,
    variances: Vec<f64>,
}

#[derive(Serialize)]
struct Summary {
    sources: Vec<SourceEstimates>,
    pca: Option<PcaSummary>,
}

fn estimate(args: &DimsArgs, source: String, x: ArrayView2<f64>) -> CliResult<SourceEstimates> {
    Ok(SourceEstimates {
        source,
        samples: x.nrows(),
        ambient_dim: x.ncols(),
        estimates: vec![
            id_lpca(x, args.lpca_k, args.lpca_variance)?,
            id_mle(x, args.mle_k)?,
            id_2nn(x, args.discard)?,
        ],
    })
}

pub fn run(args: &DimsArgs) -> CliResult<Outcome> {
    if !(args.lpca_variance > 0.0 && args.lpca_variance <= 1.0) {
        return Err(CliError::Validation(format!("lpca-variance must be in (0, 1], got {}", args.lpca_variance)));
    }
    if !(0.0..1.0).contains(&args.discard) {
        return Err(CliError::Validation(format!("discard must be in [0, 1), got {}", args.discard)));
    }
    let run = load(&args.run)?;
    if run.features.is_empty() && args.pca_components.is_none() {
        return Err(CliError::missing("features"));
    }
    let mut sources = Vec::new();
    for (layer, f) in &run.features {
        sources.push(estimate(args, format!("layer{layer}"), f.view())?);
    }
    let mut pca = None;
    if let Some(components) = args.pca_components {
        let images = run.images.as_ref().ok_or_else(|| CliError::missing("images"))?;
        let (n, h, w, c) = images.data().dim();
        let pixels = images
            .data()
            .to_shape((n * h * w, c))
            .map_err(|e| CliError::Validation(e.to_string()))?
            .to_owned();
        let (model, reduced) = pca_channel_reduce(pixels.view(), components, args.pca_threshold)?;
        let tiles: Array2<f64> = reduced
            .into_shape_with_order((n, h * w * components))
            .map_err(|e| CliError::Validation(e.to_string()))?;
        sources.push(estimate(args, "input_pca".into(), tiles.view())?);
        pca = Some(PcaSummary {
            components,
            threshold: args.pca_threshold,
            explained: model.explained,
            variances: model.variances,
        });
    }

    let out = Output::create(&args.run.out, "dims", args)?;
    out.csv(
        "dims.csv",
        &["source", "estimator", "value", "excluded", "degenerate", "params"],
        sources.iter().flat_map(|s| {
            s.estimates.iter().map(|e| {
                let params: Vec<String> = e.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                vec![
                    s.source.clone(),
                    e.estimator.clone(),
                    num(e.value),
                    e.excluded.to_string(),
                    e.degenerate.to_string(),
                    params.join(";"),
                ]
            })
        }),
    )?;
    let summary = Summary { sources, pca };
    out.json("dims.json", &summary)?;

    let mut outcome = Outcome::default();
    for s in &summary.sources {
        for e in &s.estimates {
            outcome.flag(e.degenerate, format!("{} on {}", e.estimator, s.source));
        }
    }
    Ok(outcome)
}
