use std::sync::OnceLock;

use serde::Serialize;

use crate::{Error, Result};

/// Cells of the confidence grid on `[0, 1]`.
pub const GRID_SIZE: usize = 1000;
pub const MIN_SAMPLES: usize = 10;
pub const FALLBACK_BANDWIDTH: f64 = 0.05;
const BANDWIDTH_LO: f64 = 1e-4;
const BANDWIDTH_HI: f64 = 0.5;

/// Confidences paired with correctness flags.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationInput {
    pub confidence: Vec<f64>,
    pub correct: Vec<bool>,
}

impl CalibrationInput {
    pub fn new(confidence: Vec<f64>, correct: Vec<bool>) -> Result<Self> {
        if confidence.len() != correct.len() {
            return Err(Error::Shape(format!(
                "{} confidences vs {} correctness flags",
                confidence.len(),
                correct.len()
            )));
        }
        if let Some(p) = confidence.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidInput(format!("confidence {p} outside [0, 1]")));
        }
        Ok(Self { confidence, correct })
    }

    pub fn len(&self) -> usize {
        self.confidence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.confidence.is_empty()
    }

    /// Keeps the listed samples, in the given order.
    pub fn subset(&self, ids: &[usize]) -> Self {
        Self {
            confidence: ids.iter().map(|&i| self.confidence[i]).collect(),
            correct: ids.iter().map(|&i| self.correct[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// Fixed point `smECE(σ) = σ`, found by bisection.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothEce {
    pub value: f64,
    pub bandwidth: f64,
    /// The fixed point was not bracketed and the fallback bandwidth was used.
    pub fallback: bool,
}

/// `cos(m π t_g)` for mode `m` and cell center `t_g`, row-major by mode.
fn cosine_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let g = GRID_SIZE as f64;
        let mut t = Vec::with_capacity(GRID_SIZE * GRID_SIZE);
        for m in 0..GRID_SIZE {
            for cell in 0..GRID_SIZE {
                t.push((std::f64::consts::PI * m as f64 * (cell as f64 + 0.5) / g).cos());
            }
        }
        t
    })
}

/// Residuals `correct − p̂` binned on the grid and expanded in the cosine
/// eigenbasis of the reflected (Neumann) heat kernel. Smoothing with a
/// Gaussian of width σ, mirrored at 0 and 1 to all orders, is then a
/// per-mode damping by `exp(−(mπσ)²/2)`.
struct ResidualSpectrum {
    coeffs: Vec<f64>,
    samples: usize,
}

impl ResidualSpectrum {
    fn new(input: &CalibrationInput) -> Self {
        let mut hist = vec![0.0; GRID_SIZE];
        for (&p, &c) in input.confidence.iter().zip(&input.correct) {
            let cell = ((p * GRID_SIZE as f64) as usize).min(GRID_SIZE - 1);
            hist[cell] += f64::from(u8::from(c)) - p;
        }
        let table = cosine_table();
        let mut coeffs = vec![0.0; GRID_SIZE];
        for (cell, &r) in hist.iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            for (m, a) in coeffs.iter_mut().enumerate() {
                *a += r * table[m * GRID_SIZE + cell];
            }
        }
        Self {
            coeffs,
            samples: input.len(),
        }
    }

    fn ece(&self, sigma: f64) -> f64 {
        let table = cosine_table();
        let mut smoothed = vec![0.0; GRID_SIZE];
        for (m, &a) in self.coeffs.iter().enumerate() {
            let x = std::f64::consts::PI * m as f64 * sigma;
            let damp = (-0.5 * x * x).exp();
            if damp < 1e-17 {
                break;
            }
            let w = if m == 0 { a } else { 2.0 * damp * a };
            for (s, c) in smoothed.iter_mut().zip(&table[m * GRID_SIZE..(m + 1) * GRID_SIZE]) {
                *s += w * c;
            }
        }
        let total: f64 = smoothed.iter().map(|s| s.abs()).sum();
        (total / (GRID_SIZE as f64 * self.samples as f64)).clamp(0.0, 1.0)
    }
}

/// Smooth expected calibration error: the mean absolute Gaussian-smoothed
/// residual over the confidence distribution.
pub fn smooth_ece(input: &CalibrationInput, bandwidth: Bandwidth) -> Result<SmoothEce> {
    if input.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "smooth ECE needs at least {MIN_SAMPLES} samples, got {}",
            input.len()
        )));
    }
    let spectrum = ResidualSpectrum::new(input);
    let sigma = match bandwidth {
        Bandwidth::Fixed(s) if s > 0.0 => s,
        Bandwidth::Fixed(s) => return Err(Error::InvalidInput(format!("bandwidth {s} must be positive"))),
        Bandwidth::Auto => {
            let gap = |s: f64| spectrum.ece(s) - s;
            let (mut lo, mut hi) = (BANDWIDTH_LO, BANDWIDTH_HI);
            if gap(lo) < 0.0 || gap(hi) > 0.0 {
                return Ok(SmoothEce {
                    value: spectrum.ece(FALLBACK_BANDWIDTH),
                    bandwidth: FALLBACK_BANDWIDTH,
                    fallback: true,
                });
            }
            while hi - lo > 1e-9 {
                let mid = 0.5 * (lo + hi);
                if gap(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };
    Ok(SmoothEce {
        value: spectrum.ece(sigma),
        bandwidth: sigma,
        fallback: false,
    })
}
