//! Telemetry data model: the `SPT1` tensor container, the run manifest,
//! the validated run handle, and input standardization.

mod manifest;
mod run;
mod tensor;
mod types;

pub use manifest::{FeatureLayerFile, HeadFiles, ManipulationFile, RunManifest, SaliencyFiles, SensitivityFiles};
pub use run::{load_run, LinearHead, Run, SaliencyTelemetry, SensitivityTelemetry};
pub use tensor::{DType, TensorData, TensorFile, MAX_RANK};
pub use types::{correctness_matrix, standardize, ChannelStats, ImageStack, LabelSet, PredictionTrace};
