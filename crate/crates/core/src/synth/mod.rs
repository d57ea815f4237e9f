//! Seeded synthetic fixtures with known ground truth.
//!
//! Every generator draws from its own counter-based stream under the
//! caller's master seed, so output is bit-reproducible and independent of
//! which other generators ran.

mod smoke;

pub use smoke::{toy_model_softmax, write_smoke_preset, SMOKE_CHECKPOINTS, SMOKE_SAMPLES, SMOKE_SIDE};

use ndarray::{s, Array1, Array2, Array3, Array4, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::random_rotation;
use crate::perturb::{FrequencyBand, BAND_CENTERS};
use crate::rng;
use crate::telemetry::{ImageStack, LabelSet, LinearHead, PredictionTrace};
use crate::uncertainty::CalibrationInput;
use crate::{Error, Result};

/// `n` points uniform on the unit `d`-cube, mapped into `ambient`
/// dimensions by a random orthonormal map, plus isotropic Gaussian noise.
pub fn gen_manifold(d: usize, ambient: usize, n: usize, noise: f64, seed: u64) -> Result<Array2<f64>> {
    if d == 0 || d > ambient {
        return Err(Error::InvalidInput(format!("intrinsic dim {d} must lie in 1..={ambient}")));
    }
    let mut r = rng::stream(seed, "manifold", 0);
    let latent = Array2::from_shape_fn((n, d), |_| r.random::<f64>());
    let rotation = random_rotation(ambient, &mut r);
    let mut x = latent.dot(&rotation.slice(s![..d, ..]));
    if noise > 0.0 {
        x.mapv_inplace(|v| v + noise * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r));
    }
    Ok(x)
}

/// Logit traces where sample `i` is correct from checkpoint
/// `learn_times[i]` onward (1-based; `T + 1` means never), with each
/// checkpoint's state flipped with probability `flip_rate`. The margin
/// grows by 0.5 per checkpoint since learning; before learning the wrong
/// class leads by a margin that shrinks toward the learning time.
pub fn gen_training_dynamics(
    learn_times: &[usize],
    checkpoints: usize,
    num_classes: usize,
    flip_rate: f64,
    seed: u64,
) -> Result<(PredictionTrace, LabelSet)> {
    if num_classes < 2 || checkpoints == 0 {
        return Err(Error::InvalidInput("need at least two classes and one checkpoint".into()));
    }
    if !(0.0..=1.0).contains(&flip_rate) {
        return Err(Error::InvalidInput(format!("flip rate {flip_rate} outside [0, 1]")));
    }
    if let Some(t) = learn_times.iter().find(|&&t| t == 0 || t > checkpoints + 1) {
        return Err(Error::InvalidInput(format!("learn time {t} outside 1..={}", checkpoints + 1)));
    }
    let n = learn_times.len();
    let mut label_rng = rng::stream(seed, "dynamics-labels", 0);
    let labels: Vec<usize> = (0..n).map(|_| label_rng.random_range(0..num_classes)).collect();
    let mut logits = vec![Array2::zeros((n, num_classes)); checkpoints];
    for (i, (&learn, &y)) in learn_times.iter().zip(&labels).enumerate() {
        let mut r = rng::stream(seed, "dynamics", i as u64);
        let wrong = (y + 1 + r.random_range(0..num_classes - 1)) % num_classes;
        for (t0, z) in logits.iter_mut().enumerate() {
            let t = t0 + 1;
            let learned = t >= learn;
            let correct = learned ^ r.random_bool(flip_rate);
            let margin = match (correct, learned) {
                (true, true) => 1.0 + 0.5 * (t - learn) as f64,
                (false, false) => 1.0 + 0.5 * (learn - 1 - t) as f64,
                _ => 0.5,
            };
            if correct {
                z[[i, y]] = margin;
            } else {
                z[[i, wrong]] = margin;
            }
        }
    }
    Ok((PredictionTrace::new(logits)?, LabelSet::new(labels, num_classes)?))
}

/// Confidences uniform on `[lo, hi)` with correctness drawn as
/// `Bernoulli(reliability(p̂))`, clamped to `[0, 1]`.
pub fn gen_calibrated_predictor(
    n: usize,
    lo: f64,
    hi: f64,
    reliability: impl Fn(f64) -> f64,
    seed: u64,
) -> Result<CalibrationInput> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::InvalidInput(format!("confidence range [{lo}, {hi}) not inside [0, 1]")));
    }
    let mut r = rng::stream(seed, "calibration", 0);
    let confidence: Vec<f64> = (0..n).map(|_| r.random_range(lo..hi)).collect();
    let correct = confidence.iter().map(|&p| r.random_bool(reliability(p).clamp(0.0, 1.0))).collect();
    CalibrationInput::new(confidence, correct)
}

/// Integer frequency vectors of an `n × n` grid whose radius falls in
/// `band`, one per conjugate pair, strictly below Nyquist on both axes.
fn band_frequencies(band: FrequencyBand, n: usize) -> Vec<(i64, i64)> {
    let limit = ((n as i64) - 1) / 2;
    let mut out = Vec::new();
    for fy in -limit..=limit {
        for fx in 0..=limit {
            if fx == 0 && fy <= 0 {
                continue;
            }
            if band.contains((fy as f64).hypot(fx as f64)) {
                out.push((fy, fx));
            }
        }
    }
    out
}

/// A `side × side × channels` image made of one random-phase sinusoid per
/// octave band and channel; band `b`'s sinusoid carries pixel variance
/// `band_energies[b]`, so the image variance is their sum.
pub fn gen_spectral_image(side: usize, channels: usize, band_energies: &[f64], seed: u64, index: u64) -> Result<Array3<f64>> {
    if band_energies.len() != BAND_CENTERS.len() {
        return Err(Error::InvalidInput(format!("expected {} band energies", BAND_CENTERS.len())));
    }
    let mut r = rng::stream(seed, "spectral", index);
    let mut img = Array3::zeros((side, side, channels));
    for (&center, &energy) in BAND_CENTERS.iter().zip(band_energies) {
        if energy < 0.0 {
            return Err(Error::InvalidInput(format!("negative energy at {center} c/i")));
        }
        if energy == 0.0 {
            continue;
        }
        let freqs = band_frequencies(FrequencyBand::octave(center)?, side);
        if freqs.is_empty() {
            return Err(Error::InvalidInput(format!("band {center} c/i not representable on a {side}-pixel grid")));
        }
        let amp = (2.0 * energy).sqrt();
        for ch in 0..channels {
            let (fy, fx) = freqs[r.random_range(0..freqs.len())];
            let phase = r.random_range(0.0..std::f64::consts::TAU);
            let w = std::f64::consts::TAU / side as f64;
            for y in 0..side {
                for x in 0..side {
                    img[[y, x, ch]] += amp * (w * (fy * y as i64 + fx * x as i64) as f64 + phase).cos();
                }
            }
        }
    }
    Ok(img)
}

/// A stack of spectral images, one independent draw per sample.
pub fn gen_spectral_stack(n: usize, side: usize, channels: usize, band_energies: &[f64], seed: u64) -> Result<ImageStack> {
    let mut data = Array4::zeros((n, side, side, channels));
    for i in 0..n {
        data.index_axis_mut(Axis(0), i)
            .assign(&gen_spectral_image(side, channels, band_energies, seed, i as u64)?);
    }
    ImageStack::new(data)
}

/// Gaussian classes with unit noise and means `separation · e_c`, plus an
/// out-of-distribution cluster around the origin.
#[derive(Debug, Clone)]
pub struct GaussianClasses {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub ood: Array2<f64>,
    pub means: Vec<Array1<f64>>,
    /// Head whose row `c` is `e_c`.
    pub head: LinearHead,
}

pub fn gen_gaussian_classes(
    num_classes: usize,
    dim: usize,
    separation: f64,
    n: usize,
    n_ood: usize,
    seed: u64,
) -> Result<GaussianClasses> {
    if num_classes < 2 || dim < num_classes {
        return Err(Error::InvalidInput(format!("need 2 <= classes ({num_classes}) <= dim ({dim})")));
    }
    let mut r = rng::stream(seed, "gaussian-classes", 0);
    let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..num_classes)).collect();
    let mut features = Array2::from_shape_fn((n, dim), |_| StandardNormal.sample(&mut r));
    for (i, &y) in labels.iter().enumerate() {
        features[[i, y]] += separation;
    }
    let mut o = rng::stream(seed, "gaussian-classes-ood", 0);
    let ood = Array2::from_shape_fn((n_ood, dim), |_| StandardNormal.sample(&mut o));
    let means = (0..num_classes)
        .map(|c| Array1::from_shape_fn(dim, |k| if k == c { separation } else { 0.0 }))
        .collect();
    let head = LinearHead {
        weight: Array2::from_shape_fn((num_classes, dim), |(c, k)| if c == k { 1.0 } else { 0.0 }),
        bias: Array1::zeros(num_classes),
    };
    Ok(GaussianClasses {
        features,
        labels,
        ood,
        means,
        head,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardness::{composite, dynamics_metrics, forgetting_score, learning_speed, prototypicality};
    use crate::numeric::spearman;
    use crate::perturb::suppress_band;
    use crate::telemetry::correctness_matrix;
    use crate::uncertainty::auroc;

    #[test]
    fn manifold_is_deterministic_and_low_rank() {
        let a = gen_manifold(3, 10, 200, 0.0, 5).unwrap();
        assert_eq!(a, gen_manifold(3, 10, 200, 0.0, 5).unwrap());
        assert_ne!(a, gen_manifold(3, 10, 200, 0.0, 6).unwrap());
        let centered = &a - &a.mean_axis(Axis(0)).unwrap();
        let (values, _) = crate::linalg::symmetric_eigen(&centered.t().dot(&centered));
        assert!(values[2] > 1.0);
        assert!(values[3].abs() < 1e-9);
        let full = gen_manifold(10, 10, 400, 0.0, 5).unwrap();
        let est = crate::geometry::id_mle(full.view(), 6).unwrap();
        assert!(est.value > 7.0);
    }

    #[test]
    fn dynamics_examples() {
        let learn: Vec<usize> = vec![1; 50];
        let (trace, labels) = gen_training_dynamics(&learn, 10, 2, 0.0, 1).unwrap();
        let c = correctness_matrix(&trace, &labels).unwrap();
        assert!(learning_speed(&c).iter().all(|&v| v == 1.0));
        let learn: Vec<usize> = (0..200).map(|i| 1 + i % 11).collect();
        let (trace, labels) = gen_training_dynamics(&learn, 10, 3, 0.0, 1).unwrap();
        let c = correctness_matrix(&trace, &labels).unwrap();
        assert!(forgetting_score(&c).iter().all(|&v| v == 0));
        for (i, row) in c.outer_iter().enumerate() {
            for (t0, &ok) in row.iter().enumerate() {
                assert_eq!(ok, t0 + 1 >= learn[i]);
            }
        }
    }

    #[test]
    fn composite_tracks_learn_times() {
        let mut r = rng::stream(11, "test-learn", 0);
        let learn: Vec<usize> = (0..2000).map(|_| r.random_range(1..=11)).collect();
        let (trace, labels) = gen_training_dynamics(&learn, 10, 2, 0.05, 11).unwrap();
        let profile = composite(&dynamics_metrics(&trace, &labels).unwrap()).unwrap();
        let lt: Vec<f64> = learn.iter().map(|&t| t as f64).collect();
        assert!(spearman(&profile.composite, &lt) > 0.9);
    }

    #[test]
    fn calibrated_generator() {
        let a = gen_calibrated_predictor(1000, 0.5, 1.0, |_| 1.0, 3).unwrap();
        assert!(a.confidence.iter().all(|p| (0.5..1.0).contains(p)));
        assert!(a.correct.iter().all(|&c| c));
        assert!(gen_calibrated_predictor(10, 0.6, 0.5, |p| p, 3).is_err());
    }

    #[test]
    fn spectral_variance_is_band_energy_sum() {
        let energies = [0.4, 0.3, 0.0, 0.2, 0.1, 0.05, 0.0];
        let img = gen_spectral_image(128, 2, &energies, 7, 0).unwrap();
        for ch in 0..2 {
            let v: Vec<f64> = img.index_axis(Axis(2), ch).iter().copied().collect();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / v.len() as f64;
            assert!(mean.abs() < 1e-9);
            assert!((var - energies.iter().sum::<f64>()).abs() < 1e-6);
        }
        let empty = gen_spectral_image(32, 1, &[0.0; 7], 7, 0).unwrap();
        assert!(empty.iter().all(|&v| v == 0.0));
        assert!(gen_spectral_image(32, 1, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0], 7, 0).is_err());
    }

    #[test]
    fn single_band_is_removed_by_its_filter() {
        let mut energies = [0.0; 7];
        energies[4] = 1.0;
        let img = gen_spectral_image(128, 3, &energies, 9, 0).unwrap();
        let out = suppress_band(&img, FrequencyBand::octave(28.0).unwrap()).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn gaussian_classes_recover_means() {
        let g = gen_gaussian_classes(3, 8, 10.0, 3000, 100, 4).unwrap();
        for (c, mu) in g.means.iter().enumerate() {
            let rows: Vec<usize> = (0..g.labels.len()).filter(|&i| g.labels[i] == c).collect();
            let est = g.features.select(Axis(0), &rows).mean_axis(Axis(0)).unwrap();
            let bound = 3.0 / (rows.len() as f64).sqrt();
            assert!((&est - mu).iter().all(|d| d.abs() < bound * 2.0));
        }
        assert_eq!(g.ood.dim(), (100, 8));
    }

    #[test]
    fn zero_separation_makes_prototypicality_uninformative() {
        let g = gen_gaussian_classes(2, 4, 0.0, 4000, 0, 5).unwrap();
        let labels = LabelSet::new(g.labels.clone(), 2).unwrap();
        let p = prototypicality(&g.features, &labels, &vec![true; 4000]).unwrap();
        let pos: Vec<bool> = g.labels.iter().map(|&y| y == 1).collect();
        assert!((auroc(&p, &pos).unwrap() - 0.5).abs() < 0.05);
    }
}
