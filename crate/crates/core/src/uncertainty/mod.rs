//! Calibration, epistemic-uncertainty estimators, abstention alignment,
//! and classification metrics.

mod abstention;
mod calibration;
mod estimators;
mod metrics;

pub use abstention::{alignment_score, AbstentionCurve, ALIGNMENT_MAX_Q, DEGENERATE_ECE};
pub use calibration::{smooth_ece, Bandwidth, CalibrationInput, SmoothEce, FALLBACK_BANDWIDTH, GRID_SIZE, MIN_SAMPLES};
pub use estimators::{eu_scores, EuReport, EuScore, Estimator, TrainStats, ASH_PRUNE, KNN_K, VIM_VARIANCE};
pub use metrics::{auroc, average_precision, classification_metrics, ClassificationMetrics};
