use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, Array3, Array4};

use super::manifest::RunManifest;
use super::tensor::{DType, TensorFile};
use super::types::{ImageStack, LabelSet, PredictionTrace};
use crate::perturb::Manipulation;
use crate::{Error, Result};

/// Linear classifier head `z = W f + b` over the deepest feature layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    /// `C × n`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LinearHead {
    pub fn logits(&self, feature: ndarray::ArrayView1<f64>) -> Array1<f64> {
        self.weight.dot(&feature) + &self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyTelemetry {
    pub activations: Array4<f64>,
    pub gradients: Array4<f64>,
    pub masks: Array3<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityTelemetry {
    pub clean: Array2<f64>,
    pub perturbed: Vec<(Manipulation, Array2<f64>)>,
}

/// Validated, immutable telemetry of one run.
#[derive(Debug, Clone)]
pub struct Run {
    pub manifest: RunManifest,
    pub root: PathBuf,
    pub labels: LabelSet,
    pub trace: PredictionTrace,
    /// `(layer index, N × n_l)`, sorted by layer.
    pub features: Vec<(usize, Array2<f64>)>,
    pub images: Option<ImageStack>,
    pub weights: Option<Vec<Vec<f64>>>,
    pub kernels: Option<Array4<f64>>,
    pub grad_magnitudes: Option<Array2<f64>>,
    pub saliency: Option<SaliencyTelemetry>,
    pub head: Option<LinearHead>,
    pub train_mask: Vec<bool>,
    pub sensitivity: Option<SensitivityTelemetry>,
}

impl Run {
    pub fn num_samples(&self) -> usize {
        self.manifest.num_samples
    }

    pub fn num_classes(&self) -> usize {
        self.manifest.num_classes
    }

    /// Features of the deepest probe layer.
    pub fn final_features(&self) -> Option<&Array2<f64>> {
        self.features.last().map(|(_, f)| f)
    }

    pub fn train_indices(&self) -> Vec<usize> {
        (0..self.num_samples()).filter(|&i| self.train_mask[i]).collect()
    }

    pub fn test_indices(&self) -> Vec<usize> {
        let test: Vec<usize> = (0..self.num_samples()).filter(|&i| !self.train_mask[i]).collect();
        if test.is_empty() {
            (0..self.num_samples()).collect()
        } else {
            test
        }
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        resolve(&self.root, rel)
    }
}

fn resolve(root: &Path, rel: &Path) -> PathBuf {
    if rel.is_absolute() {
        rel.to_path_buf()
    } else {
        root.join(rel)
    }
}

struct Loader<'a> {
    root: &'a Path,
}

impl Loader<'_> {
    /// Reads `rel`, checks its dims against `expected` (`None` = any extent)
    /// and rejects non-finite floats.
    fn load(&self, field: &str, rel: &Path, expected: &[Option<usize>]) -> Result<TensorFile> {
        let path = resolve(self.root, rel);
        if !path.exists() {
            return Err(Error::MissingFile {
                field: field.to_string(),
                path,
            });
        }
        let tensor = TensorFile::read(&path)?;
        let dims_ok = tensor.rank() == expected.len()
            && tensor.dims().iter().zip(expected).all(|(d, e)| e.map_or(true, |e| e == *d));
        if !dims_ok {
            let show = expected
                .iter()
                .map(|e| e.map_or("*".to_string(), |v| v.to_string()))
                .collect::<Vec<_>>()
                .join(", ");
            return Err(Error::DimMismatch {
                file: path,
                field: field.to_string(),
                expected: format!("[{show}]"),
                found: format!("{:?}", tensor.dims()),
            });
        }
        if let Some(index) = tensor.first_non_finite() {
            return Err(Error::NonFinite {
                file: path,
                field: field.to_string(),
                index,
            });
        }
        Ok(tensor)
    }

    fn float(&self, field: &str, rel: &Path, expected: &[Option<usize>]) -> Result<TensorFile> {
        let t = self.load(field, rel, expected)?;
        if t.dtype() != DType::F32 {
            return Err(Error::Format {
                file: resolve(self.root, rel),
                reason: format!("field `{field}` must be f32"),
            });
        }
        Ok(t)
    }
}

/// Loads and validates every tensor referenced by the manifest at `manifest_path`.
pub fn load_run(manifest_path: impl AsRef<Path>) -> Result<Run> {
    let manifest_path = manifest_path.as_ref();
    let manifest = RunManifest::read(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let ld = Loader { root: &root };
    let n = manifest.num_samples;
    let c = manifest.num_classes;
    let t_count = manifest.checkpoints;

    let label_tensor = ld.load("labels", &manifest.labels, &[Some(n)])?;
    if label_tensor.dtype() == DType::F32 {
        return Err(Error::Format {
            file: resolve(&root, &manifest.labels),
            reason: "labels must be an integer tensor".into(),
        });
    }
    let raw = label_tensor.to_i64_vec();
    if let Some(i) = raw.iter().position(|&y| y < 0 || y as usize >= c) {
        return Err(Error::InvalidInput(format!(
            "{}: label {} at sample {i} outside 0..{c}",
            resolve(&root, &manifest.labels).display(),
            raw[i]
        )));
    }
    let labels = LabelSet::new(raw.into_iter().map(|y| y as usize).collect(), c)?;

    let mut logits = Vec::with_capacity(t_count);
    for (t, rel) in manifest.logits.iter().enumerate() {
        let field = format!("logits[{t}]");
        logits.push(ld.float(&field, rel, &[Some(n), Some(c)])?.to_array2().expect("rank checked"));
    }
    let trace = PredictionTrace::new(logits)?;

    let mut features = Vec::with_capacity(manifest.features.len());
    for f in &manifest.features {
        let field = format!("features[layer {}]", f.layer);
        let t = ld.float(&field, &f.path, &[Some(n), None])?;
        features.push((f.layer, t.to_array2().expect("rank checked")));
    }
    features.sort_by_key(|(layer, _)| *layer);

    let images = match &manifest.images {
        Some(rel) => {
            let t = ld.float("images", rel, &[Some(n), None, None, None])?;
            Some(ImageStack::new(t.to_array4().expect("rank checked")).map_err(|e| Error::Manifest {
                file: resolve(&root, rel),
                reason: e.to_string(),
            })?)
        }
        None => None,
    };

    let weights = match &manifest.weights {
        Some(list) => {
            let mut snaps: Vec<Vec<f64>> = Vec::with_capacity(list.len());
            for (i, rel) in list.iter().enumerate() {
                let field = format!("weights[{i}]");
                let expect_len = snaps.first().map(|s| s.len());
                let t = ld.float(&field, rel, &[expect_len])?;
                snaps.push(t.to_f64_vec());
            }
            Some(snaps)
        }
        None => None,
    };

    let kernels = match &manifest.kernels {
        Some(rel) => Some(
            ld.float("kernels", rel, &[None, None, None, None])?
                .to_array4()
                .expect("rank checked"),
        ),
        None => None,
    };

    let grad_magnitudes = match &manifest.grad_magnitudes {
        Some(rel) => Some(
            ld.float("grad_magnitudes", rel, &[Some(n), Some(t_count)])?
                .to_array2()
                .expect("rank checked"),
        ),
        None => None,
    };

    let saliency = match &manifest.saliency {
        Some(s) => {
            let a = ld.float("saliency.activations", &s.activations, &[Some(n), None, None, None])?;
            let dims: Vec<Option<usize>> = a.dims().iter().map(|&d| Some(d)).collect();
            let g = ld.float("saliency.gradients", &s.gradients, &dims)?;
            let m = ld.load("saliency.masks", &s.masks, &[Some(n), None, None])?;
            Some(SaliencyTelemetry {
                activations: a.to_array4().expect("rank checked"),
                gradients: g.to_array4().expect("rank checked"),
                masks: m.to_array3().expect("rank checked").mapv(|v| v != 0.0),
            })
        }
        None => None,
    };

    let head = match &manifest.head {
        Some(h) => {
            let width = features.last().map(|(_, f)| f.ncols());
            let w = ld.float("head.weight", &h.weight, &[Some(c), width])?;
            let b = ld.float("head.bias", &h.bias, &[Some(c)])?;
            Some(LinearHead {
                weight: w.to_array2().expect("rank checked"),
                bias: b.to_array1().expect("rank checked"),
            })
        }
        None => None,
    };

    let train_mask = match &manifest.split {
        Some(rel) => ld
            .load("split", rel, &[Some(n)])?
            .to_f64_vec()
            .into_iter()
            .map(|v| v != 0.0)
            .collect(),
        None => vec![true; n],
    };

    let sensitivity = match &manifest.sensitivity {
        Some(s) => {
            let clean = ld.float("sensitivity.clean", &s.clean, &[None, Some(c)])?;
            let rows = clean.dims()[0];
            let mut perturbed = Vec::with_capacity(s.manipulations.len());
            for m in &s.manipulations {
                let kind: Manipulation = m.name.parse().map_err(|e: Error| Error::Manifest {
                    file: manifest_path.to_path_buf(),
                    reason: e.to_string(),
                })?;
                let field = format!("sensitivity.manipulations[{}]", m.name);
                let t = ld.float(&field, &m.path, &[Some(rows), Some(c)])?;
                perturbed.push((kind, t.to_array2().expect("rank checked")));
            }
            Some(SensitivityTelemetry {
                clean: clean.to_array2().expect("rank checked"),
                perturbed,
            })
        }
        None => None,
    };

    Ok(Run {
        manifest,
        root,
        labels,
        trace,
        features,
        images,
        weights,
        kernels,
        grad_magnitudes,
        saliency,
        head,
        train_mask,
        sensitivity,
    })
}
