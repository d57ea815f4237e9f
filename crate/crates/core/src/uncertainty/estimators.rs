use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::Serialize;

use crate::gaussian::ClassGaussians;
use crate::linalg::{column_means, covariance_about, symmetric_eigen};
use crate::neighbors::NeighborIndex;
use crate::numeric::{logsumexp, softmax, Direction};
use crate::telemetry::LinearHead;
use crate::{Error, Result};

/// Fraction of activations zeroed by ASH before the energy is taken.
pub const ASH_PRUNE: f64 = 0.65;
pub const KNN_K: usize = 10;
/// Cumulative variance retained by the ViM principal subspace.
pub const VIM_VARIANCE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    EnergyAsh,
    Dml,
    RpGradNorm,
    Mahalanobis,
    Gda,
    Knn,
    Cosine,
    NnGuide,
    Vim,
}

impl Estimator {
    pub const ALL: [Estimator; 9] = [
        Estimator::EnergyAsh,
        Estimator::Dml,
        Estimator::RpGradNorm,
        Estimator::Mahalanobis,
        Estimator::Gda,
        Estimator::Knn,
        Estimator::Cosine,
        Estimator::NnGuide,
        Estimator::Vim,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::EnergyAsh => "energy_ash",
            Estimator::Dml => "dml",
            Estimator::RpGradNorm => "rp_gradnorm",
            Estimator::Mahalanobis => "mahalanobis",
            Estimator::Gda => "gda",
            Estimator::Knn => "knn",
            Estimator::Cosine => "cosine",
            Estimator::NnGuide => "nnguide",
            Estimator::Vim => "vim",
        }
    }

    /// Direction in which the raw score indicates more uncertainty.
    pub fn direction(self) -> Direction {
        match self {
            Estimator::Dml | Estimator::RpGradNorm | Estimator::Gda | Estimator::Cosine => Direction::Down,
            _ => Direction::Up,
        }
    }

    pub fn needs_head(self) -> bool {
        matches!(self, Estimator::EnergyAsh | Estimator::Dml | Estimator::RpGradNorm | Estimator::Vim)
    }
}

/// Statistics of the training split consumed by the estimators.
#[derive(Debug, Clone)]
pub struct TrainStats {
    pub shared: ClassGaussians,
    pub per_class: ClassGaussians,
    pub mean: Array1<f64>,
    /// `n × k` orthonormal basis of the principal subspace.
    pub principal: Array2<f64>,
    pub head: Option<LinearHead>,
    pub prior: Vec<f64>,
    /// ViM weight: mean training max-logit over mean training residual norm.
    pub vim_alpha: Option<f64>,
    pub normalized: NeighborIndex,
}

fn unit(x: ArrayView1<f64>) -> Array1<f64> {
    let norm = x.dot(&x).sqrt().max(1e-12);
    x.mapv(|v| v / norm)
}

fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let denom = (a.dot(&a) * b.dot(&b)).sqrt().max(1e-12);
    (a.dot(&b) / denom).clamp(-1.0, 1.0)
}

impl TrainStats {
    /// Fits on training-split features, their logits and labels. The prior
    /// defaults to the empirical training label frequencies.
    pub fn fit(
        features: ArrayView2<f64>,
        logits: ArrayView2<f64>,
        labels: &[usize],
        num_classes: usize,
        head: Option<LinearHead>,
        prior: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = features.nrows();
        if logits.nrows() != n || labels.len() != n {
            return Err(Error::Shape(format!(
                "train stats: {n} feature rows, {} logit rows, {} labels",
                logits.nrows(),
                labels.len()
            )));
        }
        if let Some(h) = &head {
            if h.weight.ncols() != features.ncols() || h.weight.nrows() != logits.ncols() {
                return Err(Error::Shape(format!(
                    "head weight {:?} does not map {} features to {} logits",
                    h.weight.dim(),
                    features.ncols(),
                    logits.ncols()
                )));
            }
        }
        let shared = ClassGaussians::fit(features, labels, num_classes, false)?;
        let per_class = ClassGaussians::fit(features, labels, num_classes, true)?;
        let mean = column_means(features);
        let cov = covariance_about(features, mean.view());
        let (values, vectors) = symmetric_eigen(&cov);
        let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
        let mut k = values.len();
        let mut acc = 0.0;
        for (i, v) in values.iter().enumerate() {
            acc += v.max(0.0);
            if acc >= VIM_VARIANCE * total {
                k = i + 1;
                break;
            }
        }
        let principal = vectors.slice(ndarray::s![.., ..k]).to_owned();
        let prior = match prior {
            Some(p) => p,
            None => {
                let mut counts = vec![0.0; num_classes];
                for &y in labels {
                    counts[y] += 1.0;
                }
                counts.iter().map(|c| c / n as f64).collect()
            }
        };
        if prior.len() != logits.ncols() {
            return Err(Error::Shape(format!("prior has {} entries for {} classes", prior.len(), logits.ncols())));
        }
        let mut stats = Self {
            shared,
            per_class,
            mean,
            principal,
            head,
            prior,
            vim_alpha: None,
            normalized: NeighborIndex::new(Array2::zeros((0, 0))),
        };
        if stats.head.is_some() {
            let max_logit = logits.outer_iter().map(|z| z.iter().copied().fold(f64::NEG_INFINITY, f64::max)).sum::<f64>() / n as f64;
            let residual = features.outer_iter().map(|f| stats.residual_norm(f)).sum::<f64>() / n as f64;
            stats.vim_alpha = (residual > 0.0).then(|| max_logit / residual);
        }
        let mut normalized = features.to_owned();
        for mut row in normalized.axis_iter_mut(Axis(0)) {
            let u = unit(row.view());
            row.assign(&u);
        }
        stats.normalized = NeighborIndex::new(normalized);
        Ok(stats)
    }

    /// Norm of the component of `f − μ` outside the principal subspace.
    pub fn residual_norm(&self, f: ArrayView1<f64>) -> f64 {
        let centered = &f - &self.mean;
        let coords = self.principal.t().dot(&centered);
        let residual = centered - self.principal.dot(&coords);
        residual.dot(&residual).sqrt()
    }

    /// ASH-B: the top activations by magnitude are set to the mean of
    /// all activations' sum over the kept count; the rest are zeroed.
    pub fn ash(f: ArrayView1<f64>) -> Array1<f64> {
        let n = f.len();
        let keep = n - (ASH_PRUNE * n as f64).round() as usize;
        let mut out = Array1::zeros(n);
        if keep == 0 {
            return out;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| f[b].abs().total_cmp(&f[a].abs()).then(a.cmp(&b)));
        let fill = f.sum() / keep as f64;
        for &i in &order[..keep] {
            out[i] = fill;
        }
        out
    }

    fn knn_cosines(&self, f: ArrayView1<f64>) -> (f64, f64) {
        let nn = self.normalized.query(unit(f).view(), KNN_K);
        let k = nn.len().max(1) as f64;
        let dist = nn.iter().map(|x| x.distance).sum::<f64>() / k;
        // unit vectors: cos = 1 − d²/2
        let cos = nn.iter().map(|x| 1.0 - 0.5 * x.distance * x.distance).sum::<f64>() / k;
        (dist, cos.clamp(-1.0, 1.0))
    }

    /// Score of one sample under one estimator.
    pub fn score(&self, estimator: Estimator, f: ArrayView1<f64>, z: ArrayView1<f64>) -> f64 {
        let lse = || logsumexp(z.as_slice().expect("contiguous logits"));
        match estimator {
            Estimator::EnergyAsh => {
                let head = self.head.as_ref().expect("head checked by caller");
                let reshaped = head.logits(Self::ash(f).view());
                -logsumexp(reshaped.as_slice().expect("contiguous"))
            }
            Estimator::Dml => {
                let head = self.head.as_ref().expect("head checked by caller");
                head.weight.outer_iter().map(|w| cosine(f, w)).fold(f64::NEG_INFINITY, f64::max)
            }
            Estimator::RpGradNorm => {
                let p = softmax(z.as_slice().expect("contiguous logits"));
                let kl: f64 = p.iter().zip(&self.prior).map(|(a, b)| (a - b).abs()).sum();
                kl * f.iter().map(|v| v.abs()).sum::<f64>()
            }
            Estimator::Mahalanobis => self.shared.min_mahalanobis(f),
            Estimator::Gda => self.per_class.max_log_likelihood(f),
            Estimator::Knn => self.knn_cosines(f).0,
            Estimator::Cosine => self.knn_cosines(f).1,
            Estimator::NnGuide => -lse() * self.knn_cosines(f).1,
            Estimator::Vim => self.vim_alpha.expect("alpha checked by caller") * self.residual_norm(f) - lse(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EuScore {
    pub estimator: Estimator,
    pub direction: Direction,
    pub values: Vec<f64>,
}

impl EuScore {
    /// Scores oriented so that larger always means more uncertainty.
    pub fn oriented(&self) -> Vec<f64> {
        self.values.iter().map(|&v| self.direction.orient(v)).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EuReport {
    pub scores: Vec<EuScore>,
    pub skipped: Vec<(Estimator, String)>,
}

/// Runs every applicable estimator over `features` (N × n) with their
/// logits (N × C).
pub fn eu_scores(stats: &TrainStats, features: ArrayView2<f64>, logits: ArrayView2<f64>) -> Result<EuReport> {
    if features.nrows() != logits.nrows() {
        return Err(Error::Shape(format!("{} feature rows vs {} logit rows", features.nrows(), logits.nrows())));
    }
    if features.ncols() != stats.mean.len() {
        return Err(Error::Shape(format!("features have {} dims, train stats {}", features.ncols(), stats.mean.len())));
    }
    let logits = logits.as_standard_layout().into_owned();
    let mut skipped = Vec::new();
    let mut active = Vec::new();
    for e in Estimator::ALL {
        if e.needs_head() && stats.head.is_none() {
            skipped.push((e, "no classifier head in telemetry".to_string()));
        } else if e == Estimator::Vim && stats.vim_alpha.is_none() {
            skipped.push((e, "training residuals vanish outside the principal subspace".to_string()));
        } else {
            active.push(e);
        }
    }
    let scores = active
        .par_iter()
        .map(|&e| {
            let values = (0..features.nrows())
                .into_par_iter()
                .map(|i| stats.score(e, features.row(i), logits.row(i)))
                .collect();
            EuScore {
                estimator: e,
                direction: e.direction(),
                values,
            }
        })
        .collect();
    Ok(EuReport { scores, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uncertainty::auroc;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn fixture(seed: u64) -> (TrainStats, Array2<f64>, Array2<f64>, Vec<bool>) {
        let (c, n, sep) = (3usize, 16usize, 50.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |count: usize, ood: bool, rng: &mut ChaCha8Rng| {
            let mut f = Array2::from_shape_fn((count, n), |_| StandardNormal.sample(rng));
            let mut y = Vec::with_capacity(count);
            for i in 0..count {
                let label = rng.random_range(0..c);
                if !ood {
                    f[[i, label]] += sep;
                }
                y.push(label);
            }
            (f, y)
        };
        let head = LinearHead {
            weight: Array2::from_shape_fn((c, n), |(r, k)| f64::from(u8::from(r == k))),
            bias: Array1::zeros(c),
        };
        let (train, ytrain) = draw(1000, false, &mut rng);
        let train_logits = train.dot(&head.weight.t());
        let stats = TrainStats::fit(train.view(), train_logits.view(), &ytrain, c, Some(head.clone()), None).unwrap();
        let (id, _) = draw(300, false, &mut rng);
        let (ood, _) = draw(150, true, &mut rng);
        let eval = ndarray::concatenate(Axis(0), &[id.view(), ood.view()]).unwrap();
        let logits = eval.dot(&head.weight.t());
        let is_ood = (0..450).map(|i| i >= 300).collect();
        (stats, eval, logits, is_ood)
    }

    #[test]
    fn every_estimator_flags_the_far_cluster() {
        let (stats, eval, logits, is_ood) = fixture(1);
        let report = eu_scores(&stats, eval.view(), logits.view()).unwrap();
        assert_eq!(report.scores.len(), 9);
        for s in &report.scores {
            let a = auroc(&s.oriented(), &is_ood).unwrap();
            assert!(a > 0.9, "{}: {a}", s.estimator.name());
        }
    }

    #[test]
    fn missing_head_skips_four() {
        let (stats, eval, logits, _) = fixture(2);
        let stats = TrainStats { head: None, ..stats };
        let report = eu_scores(&stats, eval.view(), logits.view()).unwrap();
        assert_eq!(report.scores.len(), 5);
        assert_eq!(report.skipped.len(), 4);
    }

    #[test]
    fn energy_of_flat_logits() {
        let head = LinearHead {
            weight: Array2::zeros((2, 4)),
            bias: array![0.0, 0.0],
        };
        let stats_f = array![[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.5], [1.0, 1.0, 0.0, 0.0]];
        let z = Array2::zeros((4, 2));
        let stats = TrainStats::fit(stats_f.view(), z.view(), &[0, 1, 0, 1], 2, Some(head), None).unwrap();
        let e = stats.score(Estimator::EnergyAsh, stats_f.row(0), z.row(0));
        assert!((e + 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn shift_behaviour() {
        let (mut stats, eval, logits, _) = fixture(3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let i = rng.random_range(0..eval.nrows());
            let c: f64 = rng.random_range(-20.0..20.0);
            let f = eval.row(i);
            let z = logits.row(i).to_owned();
            let zs = &z + c;
            let g0 = stats.score(Estimator::RpGradNorm, f, z.view());
            let g1 = stats.score(Estimator::RpGradNorm, f, zs.view());
            assert!((g0 - g1).abs() <= 1e-12 * g0.abs().max(1.0));
            let e0 = stats.score(Estimator::EnergyAsh, f, z.view());
            stats.head.as_mut().unwrap().bias += c;
            let e1 = stats.score(Estimator::EnergyAsh, f, z.view());
            stats.head.as_mut().unwrap().bias -= c;
            assert!((e1 - (e0 - c)).abs() <= 1e-12 * e0.abs().max(1.0));
        }
    }

    #[test]
    fn mahalanobis_zero_at_class_mean() {
        let means = vec![array![1.0, 2.0], array![-3.0, 0.5]];
        let g = ClassGaussians::from_parts(means.clone(), &Array2::eye(2)).unwrap();
        assert_eq!(g.min_mahalanobis(means[1].view()), 0.0);
    }

    #[test]
    fn ranges_and_determinism() {
        let (stats, eval, logits, _) = fixture(4);
        let a = eu_scores(&stats, eval.view(), logits.view()).unwrap();
        let b = eu_scores(&stats, eval.view(), logits.view()).unwrap();
        for (x, y) in a.scores.iter().zip(&b.scores) {
            assert_eq!(x.values, y.values);
            match x.estimator {
                Estimator::Mahalanobis | Estimator::Knn => assert!(x.values.iter().all(|v| *v >= 0.0)),
                Estimator::Cosine | Estimator::Dml => assert!(x.values.iter().all(|v| (-1.0..=1.0).contains(v))),
                _ => {}
            }
        }
    }

    #[test]
    fn ash_keeps_sum_on_top_activations() {
        let f = array![4.0, -1.0, 0.5, 3.0, 0.0, -0.2];
        let out = TrainStats::ash(f.view());
        // keep 6 − round(3.9) = 2: indices 0 and 3
        let fill = f.sum() / 2.0;
        assert_eq!(out, array![fill, 0.0, 0.0, fill, 0.0, 0.0]);
    }
}
