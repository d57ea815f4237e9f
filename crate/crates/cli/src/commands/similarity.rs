use cuelens_core::similarity::{cka_cross, cka_matrix, cohens_kappa, kernel_total_variation, weight_displacement, CkaMatrix, Kappa};
use cuelens_core::telemetry::{correctness_matrix, load_run, TensorFile};
use ndarray::ArrayView2;
use serde::Serialize;

use super::{load, Outcome};
use crate::cli::SimilarityArgs;
use crate::error::{CliError, CliResult};
use crate::output::{num, Output};

#[derive(Serialize)]
struct MatrixSummary {
    rows: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<Vec<f64>>,
    degenerate: Vec<(usize, usize)>,
}

impl MatrixSummary {
    fn new(rows: Vec<usize>, cols: Vec<usize>, m: &CkaMatrix) -> Self {
        Self {
            rows,
            cols,
            values: m.values.outer_iter().map(|r| r.to_vec()).collect(),
            degenerate: m.degenerate.clone(),
        }
    }
}

#[derive(Serialize)]
struct Summary {
    minibatch: usize,
    cka: Option<MatrixSummary>,
    cka_cross: Option<MatrixSummary>,
    /// κ between consecutive checkpoints.
    kappa_consecutive: Vec<Kappa>,
    kernel_total_variation: Option<Vec<f64>>,
    weight_displacement: Option<Vec<f64>>,
}

fn matrix_rows(rows: &[usize], cols: &[usize], m: &CkaMatrix) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for (j, b) in cols.iter().enumerate() {
            out.push(vec![
                a.to_string(),
                b.to_string(),
                num(m.values[[i, j]]),
                m.degenerate.contains(&(i, j)).to_string(),
            ]);
        }
    }
    out
}

pub fn run(args: &SimilarityArgs) -> CliResult<Outcome> {
    if args.minibatch < cuelens_core::similarity::MIN_BATCH {
        return Err(CliError::Validation(format!(
            "minibatch must be at least {}",
            cuelens_core::similarity::MIN_BATCH
        )));
    }
    let run = load(&args.run)?;
    let layers: Vec<usize> = run.features.iter().map(|(l, _)| *l).collect();
    let views: Vec<ArrayView2<f64>> = run.features.iter().map(|(_, f)| f.view()).collect();
    let intra = if views.is_empty() {
        None
    } else {
        Some(cka_matrix(&views, args.minibatch, args.run.seed)?)
    };

    let cross = match &args.compare {
        Some(path) => {
            let other = load_run(path)?;
            if other.num_samples() != run.num_samples() {
                return Err(CliError::Validation(format!(
                    "compare run has {} samples, expected {}",
                    other.num_samples(),
                    run.num_samples()
                )));
            }
            let other_layers: Vec<usize> = other.features.iter().map(|(l, _)| *l).collect();
            let other_views: Vec<ArrayView2<f64>> = other.features.iter().map(|(_, f)| f.view()).collect();
            if views.is_empty() || other_views.is_empty() {
                return Err(CliError::missing("features"));
            }
            Some((other_layers, cka_cross(&views, &other_views, args.minibatch, args.run.seed)?))
        }
        None => None,
    };

    let correct = correctness_matrix(&run.trace, &run.labels)?;
    let t_count = correct.ncols();
    let mut kappas = Vec::new();
    for a in 0..t_count {
        for b in a + 1..t_count {
            let k = cohens_kappa(&correct.column(a).to_vec(), &correct.column(b).to_vec())?;
            kappas.push((a, b, k));
        }
    }
    let tv = run.kernels.as_ref().map(kernel_total_variation);
    let displacement = match &run.weights {
        Some(w) => Some(weight_displacement(w)?),
        None => None,
    };

    let out = Output::create(&args.run.out, "similarity", args)?;
    let header = ["layer_i", "layer_j", "cka", "degenerate"];
    if let Some(m) = &intra {
        out.csv("cka.csv", &header, matrix_rows(&layers, &layers, m))?;
        out.tensor("cka.spt", &TensorFile::from_array(&m.values)?)?;
    }
    if let Some((other_layers, m)) = &cross {
        out.csv("cka_cross.csv", &header, matrix_rows(&layers, other_layers, m))?;
    }
    out.csv(
        "kappa.csv",
        &["checkpoint_i", "checkpoint_j", "kappa", "observed", "expected", "degenerate"],
        kappas.iter().map(|(a, b, k)| {
            vec![
                a.to_string(),
                b.to_string(),
                num(k.value),
                num(k.observed),
                num(k.expected),
                k.degenerate.to_string(),
            ]
        }),
    )?;
    if let Some(tv) = &tv {
        out.csv(
            "kernel_tv.csv",
            &["kernel", "total_variation"],
            tv.iter().enumerate().map(|(i, v)| vec![i.to_string(), num(*v)]),
        )?;
    }
    if let Some(d) = &displacement {
        out.csv(
            "displacement.csv",
            &["from_snapshot", "to_snapshot", "displacement"],
            d.iter()
                .enumerate()
                .map(|(i, v)| vec![i.to_string(), (i + 1).to_string(), num(*v)]),
        )?;
    }

    let mut outcome = Outcome::default();
    if let Some(m) = &intra {
        outcome.flag(!m.degenerate.is_empty(), format!("{} CKA pairs without variance", m.degenerate.len()));
    }
    if let Some((_, m)) = &cross {
        outcome.flag(!m.degenerate.is_empty(), format!("{} cross-run CKA pairs without variance", m.degenerate.len()));
    }
    let summary = Summary {
        minibatch: args.minibatch,
        cka: intra.as_ref().map(|m| MatrixSummary::new(layers.clone(), layers.clone(), m)),
        cka_cross: cross.map(|(other, m)| MatrixSummary::new(layers.clone(), other, &m)),
        kappa_consecutive: kappas.iter().filter(|(a, b, _)| b - a == 1).map(|(_, _, k)| *k).collect(),
        kernel_total_variation: tv,
        weight_displacement: displacement,
    };
    out.json("similarity.json", &summary)?;
    Ok(outcome)
}
