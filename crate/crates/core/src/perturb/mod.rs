//! Cue manipulations and prediction-sensitivity profiles.
//!
//! Twenty-two manipulations are defined: seven octave-band suppressions in
//! the Fourier domain and three human-visual-system cues (shape, texture,
//! color) at five severities each. Sensitivity to a manipulation is the mean
//! Jensen–Shannon divergence between clean and perturbed softmax outputs.

mod divergence;
mod frequency;
mod hvs;
mod profile;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array3, Array4, Axis};
use rayon::prelude::*;

pub use divergence::js_divergence;
pub use frequency::{radial_frequency, suppress_band, FrequencyBand, BAND_CENTERS};
pub use hvs::{
    apply_channel_offsets, apply_grid_permutation, blur_sigma, channel_jitter, gaussian_blur,
    gaussian_blur_with_sigma, gaussian_kernel, grid_permutation, grid_shuffle, jitter_offsets, Cue,
    HvsPerturbation,
};
pub use profile::{sensitivity_profile, AxisShares, ManipulationScore, SensitivityProfile};

use crate::telemetry::ImageStack;
use crate::{rng, Error, Result};

pub const MIN_SEVERITY: u8 = 1;
pub const MAX_SEVERITY: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Manipulation {
    Frequency(FrequencyBand),
    Hvs { cue: Cue, severity: u8 },
}

impl Manipulation {
    /// All 22 manipulations: bands by center, then cues by severity.
    pub fn all() -> Vec<Manipulation> {
        let mut out: Vec<Manipulation> = BAND_CENTERS
            .iter()
            .map(|&c| Manipulation::Frequency(FrequencyBand::octave(c).expect("canonical center")))
            .collect();
        for cue in Cue::ALL {
            for severity in MIN_SEVERITY..=MAX_SEVERITY {
                out.push(Manipulation::Hvs { cue, severity });
            }
        }
        out
    }

    /// Applies the manipulation to one `H × W × C` image.
    pub fn apply(&self, image: &Array3<f64>, seed: u64) -> Result<Array3<f64>> {
        match *self {
            Manipulation::Frequency(band) => suppress_band(image, band),
            Manipulation::Hvs { cue, severity } => HvsPerturbation { cue, severity, seed }.apply(image),
        }
    }
}

impl fmt::Display for Manipulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Manipulation::Frequency(b) => write!(f, "freq:{}", b.center),
            Manipulation::Hvs { cue, severity } => write!(f, "{}:{}", cue.name(), severity),
        }
    }
}

impl FromStr for Manipulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unknown manipulation `{s}`"));
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        if kind == "freq" {
            let center: f64 = arg.parse().map_err(|_| bad())?;
            return Ok(Manipulation::Frequency(FrequencyBand::octave(center)?));
        }
        let cue = Cue::ALL.into_iter().find(|c| c.name() == kind).ok_or_else(bad)?;
        let severity: u8 = arg.parse().map_err(|_| bad())?;
        if !(MIN_SEVERITY..=MAX_SEVERITY).contains(&severity) {
            return Err(bad());
        }
        Ok(Manipulation::Hvs { cue, severity })
    }
}

/// Applies `manipulation` to every tile; sample `i` draws from the stream
/// `(manipulation name, i)` under `master_seed`.
pub fn perturb_stack(images: &ImageStack, manipulation: Manipulation, master_seed: u64) -> Result<ImageStack> {
    let tag = manipulation.to_string();
    let data = images.data();
    let tiles: Vec<Array3<f64>> = (0..images.len())
        .into_par_iter()
        .map(|i| {
            let tile = data.index_axis(Axis(0), i).to_owned();
            manipulation.apply(&tile, rng::child_seed(master_seed, &tag, i as u64))
        })
        .collect::<Result<_>>()?;
    let (n, h, w, c) = images.data().dim();
    let mut out = Array4::zeros((n, h, w, c));
    for (i, tile) in tiles.into_iter().enumerate() {
        out.index_axis_mut(Axis(0), i).assign(&tile);
    }
    ImageStack::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        let all = Manipulation::all();
        assert_eq!(all.len(), 22);
        for m in all {
            let parsed: Manipulation = m.to_string().parse().unwrap();
            assert_eq!(parsed, m);
        }
        assert!("shape:6".parse::<Manipulation>().is_err());
        assert!("freq:10".parse::<Manipulation>().is_err());
    }
}
