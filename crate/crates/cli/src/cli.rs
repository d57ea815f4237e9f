use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "cuelens", version, about = "Failure-mode diagnostics over training-run telemetry")]
pub struct Cli {
    /// Worker threads for the analyses.
    #[arg(long, global = true, env = "CUELENS_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct RunArgs {
    /// Run manifest (JSON).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean Jensen-Shannon divergence per cue manipulation.
    Sensitivity(SensitivityArgs),
    /// Per-sample hardness metrics and their composite.
    Hardness(HardnessArgs),
    /// Hard-subset selection and memorization tendency.
    Memorize(MemorizeArgs),
    /// Intrinsic dimensionality of probe-layer features.
    Dims(DimsArgs),
    /// CKA, Cohen's kappa and weight dynamics.
    Similarity(SimilarityArgs),
    /// Calibration, epistemic-uncertainty estimators and abstention.
    Uq(UqArgs),
    /// Grad-CAM++ maps and concordance with reference masks.
    Saliency(SaliencyArgs),
    /// Write a synthetic telemetry bundle.
    Synth(SynthArgs),
    /// Merge earlier outputs into a summary with plots.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SensitivityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    /// Also write every perturbed image stack, for scoring by an external model.
    #[arg(long)]
    pub export_perturbed: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct HardnessArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    /// Neighbors of the prediction-depth k-NN probes.
    #[arg(long, default_value_t = cuelens_core::hardness::DEPTH_K)]
    pub k: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct MemorizeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    /// Hard-subset fraction of the samples.
    #[arg(long, default_value_t = cuelens_core::memorization::DEFAULT_FRACTION)]
    pub fraction: f64,
    #[arg(long, default_value_t = cuelens_core::hardness::DEPTH_K)]
    pub k: usize,
    /// Fold index overriding the manifest's `folds`.
    #[arg(long)]
    pub folds: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DimsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = cuelens_core::geometry::LPCA_K)]
    pub lpca_k: usize,
    #[arg(long, default_value_t = cuelens_core::geometry::LPCA_VARIANCE)]
    pub lpca_variance: f64,
    #[arg(long, default_value_t = cuelens_core::geometry::MLE_K)]
    pub mle_k: usize,
    /// Fraction of the largest neighbor-distance ratios dropped by 2NN.
    #[arg(long, default_value_t = cuelens_core::geometry::TWO_NN_DISCARD)]
    pub discard: f64,
    /// Reduce image channels by per-pixel PCA and estimate on the reduced tiles too.
    #[arg(long)]
    pub pca_components: Option<usize>,
    /// Pixels with spectral norm at or below this are background for PCA.
    #[arg(long, default_value_t = 0.0)]
    pub pca_threshold: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SimilarityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = cuelens_core::similarity::DEFAULT_MINIBATCH)]
    pub minibatch: usize,
    /// Second run for cross-run CKA between matching samples.
    #[arg(long)]
    pub compare: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorArg {
    All,
    EnergyAsh,
    Dml,
    RpGradNorm,
    Mahalanobis,
    Gda,
    Knn,
    Cosine,
    NnGuide,
    Vim,
}

#[derive(Debug, Args, Serialize)]
pub struct UqArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    /// `auto` for the fixed-point bandwidth, or a positive number.
    #[arg(long, default_value = "auto")]
    pub bandwidth: String,
    /// Class whose probability scores AUROC/AUPRC.
    #[arg(long, default_value_t = 1)]
    pub positive_class: usize,
    #[arg(long, value_enum, default_value = "all", value_delimiter = ',')]
    pub estimators: Vec<EstimatorArg>,
}

#[derive(Debug, Args, Serialize)]
pub struct SaliencyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    /// Samples of this class are scored against their masks.
    #[arg(long, default_value_t = 1)]
    pub positive_class: usize,
    /// Write the normalized maps as an `[N, H, W]` tensor.
    #[arg(long)]
    pub write_maps: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Smoke,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub preset: Preset,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Directories holding earlier subcommand outputs.
    #[arg(long = "from", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}
