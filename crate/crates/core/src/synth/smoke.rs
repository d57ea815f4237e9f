use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, Array3, Array4, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{gen_spectral_image, gen_training_dynamics};
use crate::hardness::{composite, dynamics_metrics};
use crate::memorization::{select_hard_subset, FoldEntry, FoldIndex};
use crate::numeric::softmax;
use crate::perturb::{perturb_stack, Manipulation};
use crate::rng;
use crate::telemetry::{
    FeatureLayerFile, HeadFiles, ImageStack, ManipulationFile, RunManifest, SaliencyFiles, SensitivityFiles, TensorData,
    TensorFile,
};
use crate::{Error, Result};

pub const SMOKE_SAMPLES: usize = 300;
pub const SMOKE_CHECKPOINTS: usize = 8;
pub const SMOKE_SIDE: usize = 32;
const CLASSES: usize = 2;
const CHANNELS: usize = 3;
const LAYER_DIMS: [usize; 3] = [8, 12, 16];
const WEIGHT_LEN: usize = 64;
const MAP_SIDE: usize = 8;
const FOLDS: usize = 3;
const SEEDS_PER_FOLD: usize = 4;

/// A fixed two-class model over simple image statistics: the red-minus-green
/// mean (color) and the mean absolute neighbor difference (texture).
pub fn toy_model_softmax(images: &ImageStack) -> Array2<f64> {
    let data = images.data();
    let mut out = Array2::zeros((images.len(), CLASSES));
    for (i, tile) in data.outer_iter().enumerate() {
        let (h, w, c) = tile.dim();
        let color = if c >= 2 {
            tile.index_axis(Axis(2), 0).mean().unwrap_or(0.0) - tile.index_axis(Axis(2), 1).mean().unwrap_or(0.0)
        } else {
            0.0
        };
        let mut texture = 0.0;
        for y in 0..h {
            for x in 0..w {
                for ch in 0..c {
                    if x + 1 < w {
                        texture += (tile[[y, x + 1, ch]] - tile[[y, x, ch]]).abs();
                    }
                    if y + 1 < h {
                        texture += (tile[[y + 1, x, ch]] - tile[[y, x, ch]]).abs();
                    }
                }
            }
        }
        texture /= (2 * h * w * c) as f64;
        let z = [0.0, 3.0 * color + 2.0 * (texture - 0.5)];
        for (k, p) in softmax(&z).into_iter().enumerate() {
            out[[i, k]] = p;
        }
    }
    out
}

struct Writer<'a> {
    dir: &'a Path,
}

impl Writer<'_> {
    fn put(&self, name: &str, tensor: TensorFile) -> Result<PathBuf> {
        tensor.write(self.dir.join(name))?;
        Ok(PathBuf::from(name))
    }

    fn floats<D: ndarray::Dimension>(&self, name: &str, a: &ndarray::Array<f64, D>) -> Result<PathBuf> {
        self.put(name, TensorFile::from_array(a)?)
    }

    fn bytes(&self, name: &str, dims: Vec<usize>, v: Vec<u8>) -> Result<PathBuf> {
        self.put(name, TensorFile::new(dims, TensorData::U8(v))?)
    }
}

/// Writes a complete synthetic run (every optional telemetry field
/// populated) under `dir` and returns the manifest path.
pub fn write_smoke_preset(dir: &Path, seed: u64) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let wr = Writer { dir };
    let n = SMOKE_SAMPLES;
    let t_count = SMOKE_CHECKPOINTS;

    let mut r = rng::stream(seed, "smoke-learn", 0);
    let learn: Vec<usize> = (0..n).map(|_| r.random_range(1..=t_count + 1)).collect();
    let (trace, labels) = gen_training_dynamics(&learn, t_count, CLASSES, 0.05, seed)?;
    let y = labels.as_slice();
    let labels_path = wr.put(
        "labels.spt",
        TensorFile::new(vec![n], TensorData::I64(y.iter().map(|&v| v as i64).collect()))?,
    )?;
    let logits = trace
        .iter()
        .enumerate()
        .map(|(t, z)| wr.floats(&format!("logits_{t:03}.spt"), z))
        .collect::<Result<Vec<_>>>()?;

    // deeper layers separate classes more; late learners stay mixed longer
    let mut features = Vec::new();
    let mut final_layer = Array2::zeros((0, 0));
    for (l, &dim) in LAYER_DIMS.iter().enumerate() {
        let mut fr = rng::stream(seed, "smoke-features", l as u64);
        let mut f = Array2::from_shape_fn((n, dim), |_| StandardNormal.sample(&mut fr));
        for i in 0..n {
            let ease = 1.0 - (learn[i] - 1) as f64 / t_count as f64;
            f[[i, y[i]]] += 2.0 * (l + 1) as f64 * ease;
        }
        features.push(FeatureLayerFile {
            layer: l + 1,
            path: wr.floats(&format!("features_l{}.spt", l + 1), &f)?,
        });
        final_layer = f;
    }
    let width = final_layer.ncols();
    let head_w = Array2::from_shape_fn((CLASSES, width), |(c, k)| if c == k { 1.0 } else { 0.0 });
    let head = HeadFiles {
        weight: wr.floats("head_weight.spt", &head_w)?,
        bias: wr.floats("head_bias.spt", &Array1::<f64>::zeros(CLASSES))?,
    };

    let mut gr = rng::stream(seed, "smoke-grads", 0);
    let grads = Array2::from_shape_fn((n, t_count), |(i, t0)| {
        let noise: f64 = StandardNormal.sample(&mut gr);
        let base = if t0 + 1 < learn[i] { 1.0 + 0.1 * (learn[i] - t0 - 1) as f64 } else { 0.2 };
        base + 0.1 * noise.abs()
    });
    let grad_path = wr.floats("grad_magnitudes.spt", &grads)?;

    let mut wrng = rng::stream(seed, "smoke-weights", 0);
    let mut w: Vec<f64> = (0..WEIGHT_LEN).map(|_| StandardNormal.sample(&mut wrng)).collect();
    let mut weights = Vec::with_capacity(t_count);
    for t in 0..t_count {
        if t > 0 {
            let step = 0.5 / t as f64;
            for v in &mut w {
                *v += step * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut wrng);
            }
        }
        weights.push(wr.put(&format!("weights_{t:03}.spt"), TensorFile::from_f64(vec![WEIGHT_LEN], w.iter().copied())?)?);
    }

    let mut kr = rng::stream(seed, "smoke-kernels", 0);
    let kernels = Array4::from_shape_fn((8, 3, 3, CHANNELS), |_| kr.random_range(-1.0..1.0));
    let kernels_path = wr.floats("kernels.spt", &kernels)?;

    let mut images = Array4::zeros((n, SMOKE_SIDE, SMOKE_SIDE, CHANNELS));
    for i in 0..n {
        let mut energies = [0.5, 0.3, 0.2, 0.1, 0.05, 0.0, 0.0];
        if y[i] == 1 {
            energies[3] += 0.2;
        }
        let mut tile = gen_spectral_image(SMOKE_SIDE, CHANNELS, &energies, seed, i as u64)?;
        if y[i] == 1 {
            tile.index_axis_mut(Axis(2), 0).mapv_inplace(|v| v + 0.3);
        }
        images.index_axis_mut(Axis(0), i).assign(&tile);
    }
    let stack = ImageStack::new(images)?;
    let images_path = wr.floats("images.spt", stack.data())?;

    let clean = toy_model_softmax(&stack);
    let mut manipulations = Vec::new();
    for m in Manipulation::all() {
        let perturbed = perturb_stack(&stack, m, seed)?;
        let name = m.to_string();
        manipulations.push(ManipulationFile {
            path: wr.floats(&format!("softmax_{}.spt", name.replace(':', "_")), &toy_model_softmax(&perturbed))?,
            name,
        });
    }
    let sensitivity = SensitivityFiles {
        clean: wr.floats("softmax_clean.spt", &clean)?,
        manipulations,
    };

    let saliency = write_saliency(&wr, n, seed)?;

    let mut sr = rng::stream(seed, "smoke-split", 0);
    let split: Vec<u8> = (0..n).map(|_| u8::from(sr.random_bool(0.6))).collect();
    let split_path = wr.bytes("split.spt", vec![n], split)?;

    let hardness = composite(&dynamics_metrics(&trace, &labels)?)?.composite;
    let folds_path = write_folds(&wr, &hardness, seed)?;

    let manifest = RunManifest {
        run_id: format!("smoke-{seed}"),
        num_samples: n,
        num_classes: CLASSES,
        checkpoints: t_count,
        checkpoint_stride: 100,
        labels: labels_path,
        logits,
        features,
        images: Some(images_path),
        weights: Some(weights),
        kernels: Some(kernels_path),
        grad_magnitudes: Some(grad_path),
        saliency: Some(saliency),
        head: Some(head),
        split: Some(split_path),
        sensitivity: Some(sensitivity),
        folds: Some(folds_path),
        class_prior: vec![0.5; CLASSES],
    };
    let path = dir.join("manifest.json");
    fs::write(&path, manifest.to_json()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Four-channel target-layer maps with a bump that lands inside the
/// sample's mask for most samples.
fn write_saliency(wr: &Writer, n: usize, seed: u64) -> Result<SaliencyFiles> {
    let k = 4;
    let scale = SMOKE_SIDE / MAP_SIDE;
    let mut acts = Array4::zeros((n, k, MAP_SIDE, MAP_SIDE));
    let mut grads = Array4::zeros((n, k, MAP_SIDE, MAP_SIDE));
    let mut masks = Array3::<u8>::zeros((n, SMOKE_SIDE, SMOKE_SIDE));
    for i in 0..n {
        let mut r = rng::stream(seed, "smoke-saliency", i as u64);
        let (my, mx) = (r.random_range(1..MAP_SIDE - 1), r.random_range(1..MAP_SIDE - 1));
        let (cy, cx) = if r.random_bool(0.75) {
            (my, mx)
        } else {
            (r.random_range(0..MAP_SIDE), r.random_range(0..MAP_SIDE))
        };
        for ch in 0..k {
            for yy in 0..MAP_SIDE {
                for xx in 0..MAP_SIDE {
                    let d2 = ((yy as f64 - cy as f64).powi(2) + (xx as f64 - cx as f64).powi(2)) / 2.0;
                    let noise: f64 = StandardNormal.sample(&mut r);
                    acts[[i, ch, yy, xx]] = (-d2).exp() + 0.05 * noise.abs();
                    let g: f64 = StandardNormal.sample(&mut r);
                    grads[[i, ch, yy, xx]] = if ch < 3 { 0.5 + 0.05 * g } else { -0.3 + 0.05 * g };
                }
            }
        }
        let (py, px) = ((my * scale + scale / 2) as f64, (mx * scale + scale / 2) as f64);
        for yy in 0..SMOKE_SIDE {
            for xx in 0..SMOKE_SIDE {
                if (yy as f64 - py).hypot(xx as f64 - px) <= 5.0 {
                    masks[[i, yy, xx]] = 1;
                }
            }
        }
    }
    Ok(SaliencyFiles {
        activations: wr.floats("saliency_activations.spt", &acts)?,
        gradients: wr.floats("saliency_gradients.spt", &grads)?,
        masks: wr.bytes("saliency_masks.spt", vec![n, SMOKE_SIDE, SMOKE_SIDE], masks.iter().copied().collect())?,
    })
}

/// Three folds over interleaved sample ids; each fold's hard subset is its
/// hardest 5%, evaluated by several seeds with and without the subset.
fn write_folds(wr: &Writer, hardness: &[f64], seed: u64) -> Result<PathBuf> {
    let mut entries = Vec::with_capacity(FOLDS);
    for k in 0..FOLDS {
        let members: Vec<usize> = (k..hardness.len()).step_by(FOLDS).collect();
        let local: Vec<f64> = members.iter().map(|&i| hardness[i]).collect();
        let hard: Vec<usize> = select_hard_subset(&local, crate::memorization::DEFAULT_FRACTION)?
            .into_iter()
            .map(|j| members[j])
            .collect();
        let h = hard.len();
        let mut r = rng::stream(seed, "smoke-folds", k as u64);
        let cin: Vec<u8> = (0..SEEDS_PER_FOLD * h).map(|_| u8::from(r.random_bool(0.85))).collect();
        let cout: Vec<u8> = (0..SEEDS_PER_FOLD * h).map(|_| u8::from(r.random_bool(0.55))).collect();
        entries.push(FoldEntry {
            fold: k,
            hard_subset: wr.put(
                &format!("fold{k}_hard.spt"),
                TensorFile::new(vec![h], TensorData::I64(hard.iter().map(|&i| i as i64).collect()))?,
            )?,
            correct_in: wr.bytes(&format!("fold{k}_correct_in.spt"), vec![SEEDS_PER_FOLD, h], cin)?,
            correct_out: wr.bytes(&format!("fold{k}_correct_out.spt"), vec![SEEDS_PER_FOLD, h], cout)?,
            test_accuracy_in: None,
            test_accuracy_out: None,
        });
    }
    let index = FoldIndex { folds: entries };
    let path = wr.dir.join("folds.json");
    let text = serde_json::to_string_pretty(&index).expect("fold index serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(PathBuf::from("folds.json"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memorization::load_fold_index;
    use crate::telemetry::load_run;

    #[test]
    fn preset_loads_and_is_reproducible() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let pa = write_smoke_preset(a.path(), 3).unwrap();
        let pb = write_smoke_preset(b.path(), 3).unwrap();
        let run = load_run(&pa).unwrap();
        assert_eq!(run.num_samples(), SMOKE_SAMPLES);
        assert_eq!(run.features.len(), 3);
        assert!(run.head.is_some() && run.saliency.is_some() && run.sensitivity.is_some());
        assert_eq!(run.sensitivity.as_ref().unwrap().perturbed.len(), 22);
        let folds = load_fold_index(&run.resolve(run.manifest.folds.as_ref().unwrap())).unwrap();
        assert_eq!(folds.len(), 3);
        let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for name in names {
            let x = fs::read(a.path().join(&name)).unwrap();
            let y = fs::read(b.path().join(&name)).unwrap();
            if name != "manifest.json" {
                assert_eq!(x, y, "{name:?}");
            }
        }
        assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap());
    }
}
