use ndarray::{Array3, Axis};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::{Error, Result};

/// Octave centers in cycles per image.
pub const BAND_CENTERS: [f64; 7] = [1.75, 3.5, 7.0, 14.0, 28.0, 56.0, 112.0];

/// Half-open radial band `[center/√2, center·√2)` in cycles per image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBand {
    pub center: f64,
    pub lo: f64,
    pub hi: f64,
}

impl FrequencyBand {
    pub fn octave(center: f64) -> Result<Self> {
        if !BAND_CENTERS.contains(&center) {
            return Err(Error::InvalidInput(format!("{center} is not an octave band center")));
        }
        Ok(Self {
            center,
            lo: center / std::f64::consts::SQRT_2,
            hi: center * std::f64::consts::SQRT_2,
        })
    }

    pub fn contains(&self, r: f64) -> bool {
        r > 0.0 && r >= self.lo && r < self.hi
    }
}

/// Radial frequency of DFT bin `(ky, kx)` of an `n × n` image, using the
/// centered (signed) index convention.
pub fn radial_frequency(ky: usize, kx: usize, n: usize) -> f64 {
    let signed = |k: usize| if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    signed(ky).hypot(signed(kx))
}

fn fft2(buf: &mut [Complex<f64>], n: usize, planner: &mut FftPlanner<f64>, inverse: bool) {
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    fft.process(buf);
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for x in 0..n {
        for y in 0..n {
            col[y] = buf[y * n + x];
        }
        fft.process(&mut col);
        for y in 0..n {
            buf[y * n + x] = col[y];
        }
    }
}

/// Zeroes the Fourier coefficients inside `band` for every channel of an
/// `H × W × C` image and returns the real part of the inverse transform.
/// The DC coefficient is never touched.
pub fn suppress_band(image: &Array3<f64>, band: FrequencyBand) -> Result<Array3<f64>> {
    let (h, w, _) = image.dim();
    if h != w {
        return Err(Error::Shape(format!("band suppression needs a square image, got {h}x{w}")));
    }
    let n = h;
    let masked: Vec<usize> = (0..n * n)
        .filter(|&idx| band.contains(radial_frequency(idx / n, idx % n, n)))
        .collect();
    let mut out = image.clone();
    if masked.is_empty() {
        return Ok(out);
    }
    let mut planner = FftPlanner::new();
    let scale = 1.0 / (n * n) as f64;
    for (ch, mut lane) in out.axis_iter_mut(Axis(2)).enumerate() {
        let mut buf: Vec<Complex<f64>> = image
            .index_axis(Axis(2), ch)
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .collect();
        fft2(&mut buf, n, &mut planner, false);
        for &idx in &masked {
            buf[idx] = Complex::new(0.0, 0.0);
        }
        fft2(&mut buf, n, &mut planner, true);
        for (dst, src) in lane.iter_mut().zip(&buf) {
            *dst = src.re * scale;
        }
    }
    Ok(out)
}
