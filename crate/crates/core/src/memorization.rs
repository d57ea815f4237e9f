//! Memorization scores from paired training conditions.
//!
//! For each fold `k` a hard subset `H_k` is evaluated twice: by models
//! trained on the full fold (`in`) and by models trained with `H_k` held
//! out (`out`). The engine never retrains; it consumes those correctness
//! vectors, one row per training seed.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::telemetry::TensorFile;
use crate::{Error, Result};

pub const DEFAULT_FRACTION: f64 = 0.05;

/// The `⌈fraction·N⌉` ids with the largest composite hardness, ties to the
/// lower id, returned in descending-hardness order.
pub fn select_hard_subset(composite: &[f64], fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidInput(format!("fraction {fraction} outside (0, 1)")));
    }
    let n = composite.len();
    // guard against 0.05 * 100 = 5.000000000000001
    let count = ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut ids: Vec<usize> = (0..n).collect();
    ids.sort_by(|&a, &b| composite[b].total_cmp(&composite[a]).then(a.cmp(&b)));
    ids.truncate(count);
    Ok(ids)
}

/// Excess probability of a correct prediction from including the sample.
pub fn mem_score(in_correct_prob: f64, out_correct_prob: f64) -> f64 {
    in_correct_prob - out_correct_prob
}

fn frequency(runs: impl Iterator<Item = bool>) -> f64 {
    let (hits, total) = runs.fold((0usize, 0usize), |(h, t), c| (h + c as usize, t + 1));
    hits as f64 / total as f64
}

/// [`mem_score`] with probabilities estimated as frequencies over seeds.
pub fn empirical_mem_score(in_runs: &[bool], out_runs: &[bool]) -> f64 {
    mem_score(frequency(in_runs.iter().copied()), frequency(out_runs.iter().copied()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldPair {
    pub fold: usize,
    pub hard_subset: Vec<usize>,
    /// `seeds × |H|`, from models trained with `H` included.
    pub correct_in: Array2<bool>,
    /// `seeds × |H|`, from models trained with `H` held out.
    pub correct_out: Array2<bool>,
    pub test_accuracy_in: Option<f64>,
    pub test_accuracy_out: Option<f64>,
}

impl FoldPair {
    pub fn new(fold: usize, hard_subset: Vec<usize>, correct_in: Array2<bool>, correct_out: Array2<bool>) -> Result<Self> {
        let h = hard_subset.len();
        if h == 0 {
            return Err(Error::InvalidInput(format!("fold {fold}: empty hard subset")));
        }
        for (name, m) in [("correct_in", &correct_in), ("correct_out", &correct_out)] {
            if m.ncols() != h || m.nrows() == 0 {
                return Err(Error::Shape(format!(
                    "fold {fold}: {name} is {:?}, expected [seeds>=1, {h}]",
                    m.dim()
                )));
            }
        }
        Ok(Self {
            fold,
            hard_subset,
            correct_in,
            correct_out,
            test_accuracy_in: None,
            test_accuracy_out: None,
        })
    }

    /// Single-seed convenience constructor.
    pub fn from_vectors(fold: usize, hard_subset: Vec<usize>, correct_in: &[bool], correct_out: &[bool]) -> Result<Self> {
        let row = |v: &[bool]| Array2::from_shape_vec((1, v.len()), v.to_vec()).expect("1 x len");
        Self::new(fold, hard_subset, row(correct_in), row(correct_out))
    }

    pub fn in_accuracy(&self) -> f64 {
        frequency(self.correct_in.iter().copied())
    }

    pub fn out_accuracy(&self) -> f64 {
        frequency(self.correct_out.iter().copied())
    }

    /// Per-sample memorization scores over the hard subset.
    pub fn mem_scores(&self) -> Vec<f64> {
        (0..self.hard_subset.len())
            .map(|j| {
                let a: Vec<bool> = self.correct_in.column(j).to_vec();
                let b: Vec<bool> = self.correct_out.column(j).to_vec();
                empirical_mem_score(&a, &b)
            })
            .collect()
    }
}

/// Memorization tendency over the hard subsets: mean over folds of the
/// in-accuracy minus the out-accuracy.
pub fn mt_hard(folds: &[FoldPair]) -> Result<f64> {
    if folds.is_empty() {
        return Err(Error::InsufficientData("no folds".into()));
    }
    Ok(folds.iter().map(|f| f.in_accuracy() - f.out_accuracy()).sum::<f64>() / folds.len() as f64)
}

/// On-disk fold index. Paths are relative to the index file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldIndex {
    pub folds: Vec<FoldEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldEntry {
    pub fold: usize,
    /// i64 `[|H|]` sample ids.
    pub hard_subset: PathBuf,
    /// u8 `[|H|]` or `[seeds, |H|]`.
    pub correct_in: PathBuf,
    pub correct_out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_accuracy_in: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_accuracy_out: Option<f64>,
}

fn correctness_rows(t: &TensorFile, file: &Path) -> Result<Array2<bool>> {
    let flags: Vec<bool> = t.to_f64_vec().into_iter().map(|v| v != 0.0).collect();
    let shape = match t.dims() {
        [h] => (1, *h),
        [s, h] => (*s, *h),
        other => {
            return Err(Error::DimMismatch {
                file: file.to_path_buf(),
                field: "correctness".into(),
                expected: "[|H|] or [seeds, |H|]".into(),
                found: format!("{other:?}"),
            })
        }
    };
    Ok(Array2::from_shape_vec(shape, flags).expect("dims match payload"))
}

pub fn load_fold_index(path: &Path) -> Result<Vec<FoldPair>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let index: FoldIndex = serde_json::from_str(&text).map_err(|e| Error::Manifest {
        file: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let root = path.parent().unwrap_or(Path::new("."));
    let open = |rel: &Path, field: &str| -> Result<(PathBuf, TensorFile)> {
        let p = if rel.is_absolute() { rel.to_path_buf() } else { root.join(rel) };
        if !p.exists() {
            return Err(Error::MissingFile {
                field: field.to_string(),
                path: p,
            });
        }
        let t = TensorFile::read(&p)?;
        Ok((p, t))
    };
    index
        .folds
        .iter()
        .map(|entry| {
            let (_, ids) = open(&entry.hard_subset, "hard_subset")?;
            let (pin, tin) = open(&entry.correct_in, "correct_in")?;
            let (pout, tout) = open(&entry.correct_out, "correct_out")?;
            let ids: Vec<usize> = ids.to_i64_vec().into_iter().map(|v| v as usize).collect();
            let mut pair = FoldPair::new(entry.fold, ids, correctness_rows(&tin, &pin)?, correctness_rows(&tout, &pout)?)?;
            pair.test_accuracy_in = entry.test_accuracy_in;
            pair.test_accuracy_out = entry.test_accuracy_out;
            Ok(pair)
        })
        .collect()
}
