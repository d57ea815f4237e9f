use ndarray::{Array2, Array4, Axis};

use crate::numeric::argmax;
use crate::{Error, Result};

/// Class index per sample, each below `num_classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabelSet {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if let Some((i, y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(Error::InvalidInput(format!(
                "label {y} at sample {i} is not below {num_classes}"
            )));
        }
        Ok(Self { labels, num_classes })
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }
}

/// Logits of every sample at every checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTrace {
    logits: Vec<Array2<f64>>,
}

impl PredictionTrace {
    /// `logits[t]` is the `N × C` matrix at checkpoint `t`.
    pub fn new(logits: Vec<Array2<f64>>) -> Result<Self> {
        let first = logits
            .first()
            .ok_or_else(|| Error::InvalidInput("trace needs at least one checkpoint".into()))?
            .dim();
        if let Some(t) = logits.iter().position(|l| l.dim() != first) {
            return Err(Error::Shape(format!(
                "checkpoint {t} has shape {:?}, expected {first:?}",
                logits[t].dim()
            )));
        }
        Ok(Self { logits })
    }

    pub fn checkpoints(&self) -> usize {
        self.logits.len()
    }

    pub fn num_samples(&self) -> usize {
        self.logits[0].nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.logits[0].ncols()
    }

    pub fn at(&self, t: usize) -> &Array2<f64> {
        &self.logits[t]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Array2<f64>> {
        self.logits.iter()
    }

    pub fn last(&self) -> &Array2<f64> {
        self.logits.last().expect("non-empty by construction")
    }
}

/// `N × T` matrix, true where the checkpoint's argmax equals the label.
pub fn correctness_matrix(trace: &PredictionTrace, labels: &LabelSet) -> Result<Array2<bool>> {
    if trace.num_samples() != labels.len() {
        return Err(Error::Shape(format!(
            "{} traced samples vs {} labels",
            trace.num_samples(),
            labels.len()
        )));
    }
    let y = labels.as_slice();
    let mut out = Array2::from_elem((trace.num_samples(), trace.checkpoints()), false);
    for (t, logits) in trace.iter().enumerate() {
        for (i, row) in logits.outer_iter().enumerate() {
            let row = row.to_vec();
            out[[i, t]] = argmax(&row) == y[i];
        }
    }
    Ok(out)
}

/// `N × H × W × C` stack of square tiles.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageStack {
    data: Array4<f64>,
}

impl ImageStack {
    pub fn new(data: Array4<f64>) -> Result<Self> {
        let (_, h, w, _) = data.dim();
        if h != w {
            return Err(Error::Shape(format!("tiles must be square, got {h}x{w}")));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite pixel at element {i}")));
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &Array4<f64> {
        &self.data
    }

    pub fn into_inner(self) -> Array4<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn side(&self) -> usize {
        self.data.dim().1
    }

    pub fn channels(&self) -> usize {
        self.data.dim().3
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl ChannelStats {
    pub fn of(stack: &ImageStack) -> Self {
        let c = stack.channels();
        let mut mean = vec![0.0; c];
        let mut variance = vec![0.0; c];
        for ch in 0..c {
            let lane = stack.data.index_axis(Axis(3), ch);
            let n = lane.len() as f64;
            let m = lane.iter().sum::<f64>() / n;
            mean[ch] = m;
            variance[ch] = lane.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        }
        Self { mean, variance }
    }
}

/// Per-channel z-scoring with statistics pooled over the whole stack.
pub fn standardize(images: &ImageStack) -> Result<ImageStack> {
    let stats = ChannelStats::of(images);
    if let Some(ch) = stats.variance.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::DegenerateChannel { channel: ch });
    }
    let mut data = images.data.clone();
    for (ch, mut lane) in data.axis_iter_mut(Axis(3)).enumerate() {
        let (m, s) = (stats.mean[ch], stats.variance[ch].sqrt());
        lane.mapv_inplace(|v| (v - m) / s);
    }
    Ok(ImageStack { data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stack_from(f: impl Fn(usize, usize, usize, usize) -> f64, n: usize, s: usize, c: usize) -> ImageStack {
        ImageStack::new(Array4::from_shape_fn((n, s, s, c), |(a, b, d, e)| f(a, b, d, e))).unwrap()
    }

    #[test]
    fn correctness_examples() {
        let labels = LabelSet::new(vec![0, 1], 2).unwrap();
        let trace = PredictionTrace::new(vec![array![[2.0, 1.0], [1.0, 1.0]]]).unwrap();
        let c = correctness_matrix(&trace, &labels).unwrap();
        assert!(c[[0, 0]]);
        assert!(!c[[1, 0]]);
    }

    #[test]
    fn correctness_matches_naive_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let logits: Vec<Array2<f64>> = (0..3)
                .map(|_| Array2::from_shape_fn((10, 3), |_| (rng.random_range(0..4) as f64) * 0.5))
                .collect();
            let y: Vec<usize> = (0..10).map(|_| rng.random_range(0..3)).collect();
            let trace = PredictionTrace::new(logits.clone()).unwrap();
            let c = correctness_matrix(&trace, &LabelSet::new(y.clone(), 3).unwrap()).unwrap();
            for t in 0..3 {
                for i in 0..10 {
                    let row = logits[t].row(i);
                    let mut best = 0;
                    for k in 0..3 {
                        if row[k] > row[best] {
                            best = k;
                        }
                    }
                    assert_eq!(c[[i, t]], best == y[i]);
                }
            }
        }
    }

    #[test]
    fn label_out_of_range() {
        assert!(LabelSet::new(vec![0, 2], 2).is_err());
    }

    #[test]
    fn standardize_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise: Vec<f64> = (0..4 * 8 * 8 * 2).map(|_| rng.random::<f64>() - 0.5).collect();
        let stack = stack_from(
            |a, b, d, e| {
                let idx = ((a * 8 + b) * 8 + d) * 2 + e;
                if e == 0 {
                    5.0 + noise[idx]
                } else {
                    -3.0 + 2.0 * noise[idx]
                }
            },
            4,
            8,
            2,
        );
        let z = standardize(&stack).unwrap();
        let stats = ChannelStats::of(&z);
        for ch in 0..2 {
            assert!(stats.mean[ch].abs() < 1e-6);
            assert!((stats.variance[ch] - 1.0).abs() < 1e-4);
        }
        let again = standardize(&z).unwrap();
        let diff = (&again.data - &z.data).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
        assert!(diff < 1e-6);
    }

    #[test]
    fn standardize_is_affine_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let base = Array4::from_shape_fn((3, 4, 4, 2), |_| rng.random::<f64>());
        let a = standardize(&ImageStack::new(base.clone()).unwrap()).unwrap();
        let scaled = base.mapv(|v| 7.5 * v - 12.0);
        let b = standardize(&ImageStack::new(scaled).unwrap()).unwrap();
        let diff = (&a.data - &b.data).mapv(f64::abs).fold(0.0f64, |x, &y| x.max(y));
        assert!(diff < 1e-5);
    }

    #[test]
    fn zero_variance_channel_rejected() {
        let stack = stack_from(|_, _, _, e| if e == 0 { 1.0 } else { 0.0 }, 2, 2, 1);
        assert!(matches!(standardize(&stack), Err(Error::DegenerateChannel { channel: 0 })));
    }

    #[test]
    fn non_square_rejected() {
        assert!(ImageStack::new(Array4::zeros((1, 2, 3, 1))).is_err());
    }
}
