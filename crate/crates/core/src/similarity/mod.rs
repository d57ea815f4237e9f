//! Representation and prediction similarity, and weight-dynamics
//! statistics.

mod cka;
mod kappa;
mod weights;

pub use cka::{batch_partition, cka, cka_cross, cka_matrix, unbiased_hsic, CkaMatrix, CkaResult, DEFAULT_MINIBATCH, MIN_BATCH};
pub use kappa::{cohens_kappa, Kappa};
pub use weights::{kernel_total_variation, weight_displacement};
