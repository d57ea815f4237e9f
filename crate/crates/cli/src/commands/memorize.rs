use cuelens_core::memorization::{load_fold_index, mt_hard, select_hard_subset};
use serde::Serialize;

use super::{hardness, load, Outcome};
use crate::cli::MemorizeArgs;
use crate::error::{CliError, CliResult};
use crate::output::{num, Output};

#[derive(Serialize)]
struct FoldSummary {
    fold: usize,
    size: usize,
    seeds: usize,
    in_accuracy: f64,
    out_accuracy: f64,
    mean_mem: f64,
    test_accuracy_in: Option<f64>,
    test_accuracy_out: Option<f64>,
}

#[derive(Serialize)]
struct Summary {
    fraction: f64,
    hard_subset_size: usize,
    mt_hard: Option<f64>,
    folds: Vec<FoldSummary>,
}

fn column_mean(m: &ndarray::Array2<bool>, j: usize) -> f64 {
    let col = m.column(j);
    col.iter().filter(|&&v| v).count() as f64 / col.len() as f64
}

pub fn run(args: &MemorizeArgs) -> CliResult<Outcome> {
    if !(args.fraction > 0.0 && args.fraction <= 1.0) {
        return Err(CliError::Validation(format!("fraction must be in (0, 1], got {}", args.fraction)));
    }
    let run = load(&args.run)?;
    let profile = hardness::profile(&run, args.k)?;
    let hard = select_hard_subset(&profile.composite, args.fraction)?;

    let folds_path = match (&args.folds, &run.manifest.folds) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(rel)) => Some(run.resolve(rel)),
        (None, None) => None,
    };
    let folds = match &folds_path {
        Some(p) => load_fold_index(p)?,
        None => Vec::new(),
    };
    let n = run.num_samples();
    for f in &folds {
        if let Some(&bad) = f.hard_subset.iter().find(|&&i| i >= n) {
            return Err(CliError::Validation(format!("fold {}: sample id {bad} outside 0..{n}", f.fold)));
        }
    }

    let out = Output::create(&args.run.out, "memorize", args)?;
    out.csv(
        "hard_subset.csv",
        &["rank", "sample", "composite"],
        hard.iter()
            .enumerate()
            .map(|(r, &i)| vec![r.to_string(), i.to_string(), num(profile.composite[i])]),
    )?;
    out.csv(
        "memorization.csv",
        &["fold", "sample", "in_accuracy", "out_accuracy", "mem"],
        folds.iter().flat_map(|f| {
            let mem = f.mem_scores();
            (0..f.hard_subset.len()).map(move |j| {
                vec![
                    f.fold.to_string(),
                    f.hard_subset[j].to_string(),
                    num(column_mean(&f.correct_in, j)),
                    num(column_mean(&f.correct_out, j)),
                    num(mem[j]),
                ]
            })
        }),
    )?;
    let summary = Summary {
        fraction: args.fraction,
        hard_subset_size: hard.len(),
        mt_hard: if folds.is_empty() { None } else { Some(mt_hard(&folds)?) },
        folds: folds
            .iter()
            .map(|f| {
                let mem = f.mem_scores();
                FoldSummary {
                    fold: f.fold,
                    size: f.hard_subset.len(),
                    seeds: f.correct_in.nrows(),
                    in_accuracy: f.in_accuracy(),
                    out_accuracy: f.out_accuracy(),
                    mean_mem: mem.iter().sum::<f64>() / mem.len() as f64,
                    test_accuracy_in: f.test_accuracy_in,
                    test_accuracy_out: f.test_accuracy_out,
                }
            })
            .collect(),
    };
    out.json("memorization.json", &summary)?;

    let mut outcome = Outcome::default();
    outcome.flag(profile.degenerate, "every hardness metric is constant, hard subset is by sample id");
    Ok(outcome)
}
