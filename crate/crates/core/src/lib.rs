//! Failure-mode diagnostics over training-run telemetry.
//!
//! The crate ingests the artifacts of a training run (logits per checkpoint,
//! probe-layer features, weight snapshots, activation/gradient maps, image
//! tiles) and computes cue-sensitivity profiles, sample hardness,
//! memorization tendency, intrinsic dimensionality, representation
//! similarity, calibration with epistemic-uncertainty estimators, and
//! saliency concordance.
//!
//! All analyses are pure functions over an immutable [`telemetry::Run`];
//! randomness is drawn from counter-based streams ([`rng`]) so results do
//! not depend on thread scheduling.

pub mod error;
pub mod gaussian;
pub mod geometry;
pub mod hardness;
pub mod linalg;
pub mod memorization;
pub mod neighbors;
pub mod numeric;
pub mod perturb;
pub mod rng;
pub mod saliency;
pub mod similarity;
pub mod synth;
pub mod telemetry;
pub mod uncertainty;

pub use error::{Error, Result};

/// Engine version recorded in provenance records.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
