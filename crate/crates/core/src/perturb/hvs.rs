//! Shape, texture and color perturbations at severities 1–5.

use ndarray::{Array3, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MAX_SEVERITY, MIN_SEVERITY};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cue {
    Shape,
    Texture,
    Color,
}

impl Cue {
    pub const ALL: [Cue; 3] = [Cue::Shape, Cue::Texture, Cue::Color];

    pub fn name(self) -> &'static str {
        match self {
            Cue::Shape => "shape",
            Cue::Texture => "texture",
            Cue::Color => "color",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HvsPerturbation {
    pub cue: Cue,
    pub severity: u8,
    pub seed: u64,
}

impl HvsPerturbation {
    pub fn apply(&self, image: &Array3<f64>) -> Result<Array3<f64>> {
        check_severity(self.severity)?;
        Ok(match self.cue {
            Cue::Shape => grid_shuffle(image, self.severity, self.seed),
            Cue::Texture => gaussian_blur(image, self.severity, self.seed),
            Cue::Color => channel_jitter(image, self.severity, self.seed),
        })
    }
}

fn check_severity(severity: u8) -> Result<()> {
    if (MIN_SEVERITY..=MAX_SEVERITY).contains(&severity) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("severity {severity} outside 1..=5")))
    }
}

// ----------------------------------------------------------------------------
// Shape: grid shuffle

/// Uniform random permutation of `cells` grid cells; `perm[slot]` is the
/// source cell placed at `slot` (both in row-major cell order).
pub fn grid_permutation<R: Rng>(cells: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..cells).collect();
    perm.shuffle(rng);
    perm
}

fn cell_bounds(extent: usize, grid: usize) -> Vec<(usize, usize)> {
    let size = extent.div_ceil(grid);
    (0..grid)
        .map(|i| ((i * size).min(extent), ((i + 1) * size).min(extent)))
        .collect()
}

/// Rearranges a `grid × grid` tiling of the image according to `perm`.
///
/// Cells are `⌈H/grid⌉` pixels wide with a ragged last row/column. Source
/// cells are read in raster order and their pixels written into the
/// destination slots in raster order, so equal-sized cells move intact and
/// ragged ones are reflowed; the pixel multiset is always preserved.
pub fn apply_grid_permutation(image: &Array3<f64>, grid: usize, perm: &[usize]) -> Array3<f64> {
    let (h, w, channels) = image.dim();
    assert_eq!(perm.len(), grid * grid, "permutation must cover every cell");
    let rows = cell_bounds(h, grid);
    let cols = cell_bounds(w, grid);
    let cell_pixels = |cell: usize| {
        let (r0, r1) = rows[cell / grid];
        let (c0, c1) = cols[cell % grid];
        (r0..r1).flat_map(move |y| (c0..c1).map(move |x| (y, x)))
    };
    let sources = perm.iter().flat_map(|&src| cell_pixels(src));
    let destinations = (0..grid * grid).flat_map(cell_pixels);
    let mut out = image.clone();
    for ((sy, sx), (dy, dx)) in sources.zip(destinations) {
        for ch in 0..channels {
            out[[dy, dx, ch]] = image[[sy, sx, ch]];
        }
    }
    out
}

/// Shuffles an `(α+1) × (α+1)` grid of cells.
pub fn grid_shuffle(image: &Array3<f64>, severity: u8, seed: u64) -> Array3<f64> {
    let grid = severity as usize + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perm = grid_permutation(grid * grid, &mut rng);
    apply_grid_permutation(image, grid, &perm)
}

// ----------------------------------------------------------------------------
// Texture: Gaussian blur

/// σ drawn from the open interval `(0.5α, 0.5(α+1))`.
pub fn blur_sigma<R: Rng>(severity: u8, rng: &mut R) -> f64 {
    let lo = 0.5 * severity as f64;
    let hi = 0.5 * (severity as f64 + 1.0);
    loop {
        let s = rng.random_range(lo..hi);
        if s > lo {
            return s;
        }
    }
}

/// Normalized Gaussian taps truncated at `⌈3σ⌉`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|j| (-(j * j) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Symmetric reflection `… c b a | a b c …` for any offset.
fn reflect(idx: i64, n: usize) -> usize {
    let n = n as i64;
    let m = idx.rem_euclid(2 * n);
    (if m >= n { 2 * n - 1 - m } else { m }) as usize
}

fn convolve_axis(image: &Array3<f64>, taps: &[f64], axis: usize) -> Array3<f64> {
    let radius = (taps.len() / 2) as i64;
    let (h, w, channels) = image.dim();
    let extent = if axis == 0 { h } else { w };
    Array3::from_shape_fn((h, w, channels), |(y, x, ch)| {
        let pos = if axis == 0 { y } else { x } as i64;
        taps.iter()
            .enumerate()
            .map(|(k, t)| {
                let j = reflect(pos + k as i64 - radius, extent);
                let v = if axis == 0 { image[[j, x, ch]] } else { image[[y, j, ch]] };
                t * v
            })
            .sum()
    })
}

/// Separable Gaussian blur with a fixed σ.
pub fn gaussian_blur_with_sigma(image: &Array3<f64>, sigma: f64) -> Array3<f64> {
    let taps = gaussian_kernel(sigma);
    convolve_axis(&convolve_axis(image, &taps, 0), &taps, 1)
}

pub fn gaussian_blur(image: &Array3<f64>, severity: u8, seed: u64) -> Array3<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gaussian_blur_with_sigma(image, blur_sigma(severity, &mut rng))
}

// ----------------------------------------------------------------------------
// Color: per-channel offset

/// One offset per channel drawn from `[-0.1α, 0.1α]`.
pub fn jitter_offsets<R: Rng>(channels: usize, severity: u8, rng: &mut R) -> Vec<f64> {
    let bound = 0.1 * severity as f64;
    (0..channels).map(|_| rng.random_range(-bound..=bound)).collect()
}

pub fn apply_channel_offsets(image: &Array3<f64>, offsets: &[f64]) -> Array3<f64> {
    let mut out = image.clone();
    for (ch, mut lane) in out.axis_iter_mut(Axis(2)).enumerate() {
        lane += offsets[ch];
    }
    out
}

pub fn channel_jitter(image: &Array3<f64>, severity: u8, seed: u64) -> Array3<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offsets = jitter_offsets(image.dim().2, severity, &mut rng);
    apply_channel_offsets(image, &offsets)
}
