use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// JSON description of a training run. Paths are relative to the manifest's
/// directory unless absolute. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub run_id: String,
    pub num_samples: usize,
    pub num_classes: usize,
    /// Number of recorded checkpoints `T`.
    pub checkpoints: usize,
    /// Training iterations between checkpoints.
    pub checkpoint_stride: u64,
    /// i64 `[N]` class indices.
    pub labels: PathBuf,
    /// One f32 `[N, C]` logit file per checkpoint, in order.
    pub logits: Vec<PathBuf>,
    /// Probe-layer features, f32 `[N, n_l]`.
    #[serde(default)]
    pub features: Vec<FeatureLayerFile>,
    /// f32 `[N, H, W, C_img]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<PathBuf>,
    /// Flattened f32 weight vectors, one per snapshot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<PathBuf>>,
    /// First-layer kernels, f32 `[K_out, k, k, C_in]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernels: Option<PathBuf>,
    /// f32 `[N, T]` per-sample gradient magnitudes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_magnitudes: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saliency: Option<SaliencyFiles>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<HeadFiles>,
    /// u8 `[N]`, 1 marks a training sample. Absent means all samples train.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivityFiles>,
    /// JSON fold index for memorization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds: Option<PathBuf>,
    pub class_prior: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureLayerFile {
    /// Probe depth; lower is shallower.
    pub layer: usize,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaliencyFiles {
    /// f32 `[N, K, h, w]` target-layer activations.
    pub activations: PathBuf,
    /// f32 `[N, K, h, w]` gradients of the class score.
    pub gradients: PathBuf,
    /// u8 `[N, H, W]` tumor masks.
    pub masks: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadFiles {
    /// f32 `[C, n]` over the deepest feature layer.
    pub weight: PathBuf,
    /// f32 `[C]`.
    pub bias: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityFiles {
    /// f32 `[N, C]` softmax on clean inputs.
    pub clean: PathBuf,
    pub manipulations: Vec<ManipulationFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManipulationFile {
    /// Manipulation name, e.g. `freq:28` or `color:3`.
    pub name: String,
    /// f32 `[N, C]` softmax on perturbed inputs.
    pub path: PathBuf,
}

impl RunManifest {
    pub fn from_json(text: &str, file: &Path) -> Result<Self> {
        let manifest: RunManifest = serde_json::from_str(text).map_err(|e| Error::Manifest {
            file: file.to_path_buf(),
            reason: e.to_string(),
        })?;
        manifest.check_header(file)?;
        Ok(manifest)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::MissingFile {
                    field: "manifest".into(),
                    path: path.to_path_buf(),
                }
            } else {
                Error::io(path, e)
            }
        })?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    fn check_header(&self, file: &Path) -> Result<()> {
        let bad = |reason: String| Error::Manifest {
            file: file.to_path_buf(),
            reason,
        };
        if self.num_samples == 0 || self.num_classes == 0 || self.checkpoints == 0 {
            return Err(bad("num_samples, num_classes and checkpoints must be positive".into()));
        }
        if self.logits.len() != self.checkpoints {
            return Err(Error::DimMismatch {
                file: file.to_path_buf(),
                field: "logits".into(),
                expected: format!("{} checkpoint files", self.checkpoints),
                found: format!("{} files", self.logits.len()),
            });
        }
        if self.class_prior.len() != self.num_classes {
            return Err(Error::DimMismatch {
                file: file.to_path_buf(),
                field: "class_prior".into(),
                expected: format!("{} entries", self.num_classes),
                found: format!("{} entries", self.class_prior.len()),
            });
        }
        let total: f64 = self.class_prior.iter().sum();
        if (total - 1.0).abs() > 1e-6 || self.class_prior.iter().any(|p| !(*p >= 0.0)) {
            return Err(bad(format!("class_prior must be a distribution (sums to {total})")));
        }
        let mut layers: Vec<usize> = self.features.iter().map(|f| f.layer).collect();
        layers.sort_unstable();
        if layers.windows(2).any(|w| w[0] == w[1]) {
            return Err(bad("duplicate feature layer index".into()));
        }
        Ok(())
    }
}
