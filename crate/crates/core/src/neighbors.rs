//! Exact Euclidean k-nearest-neighbor search.
//!
//! Brute force over all points; neighbors are ordered by squared distance,
//! then by index, so results are a total order and match any exhaustive
//! oracle that uses the same tie rule.

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct NeighborIndex {
    points: Array2<f64>,
}

fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl NeighborIndex {
    pub fn new(points: Array2<f64>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    fn nearest(&self, query: ArrayView1<f64>, k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
        let mut cand: Vec<(f64, usize)> = self
            .points
            .outer_iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != exclude)
            .map(|(i, p)| (squared_distance(query, p), i))
            .collect();
        let k = k.min(cand.len());
        if k == 0 {
            return Vec::new();
        }
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, cmp);
            cand.truncate(k);
        }
        cand.sort_unstable_by(cmp);
        cand.into_iter()
            .map(|(d2, index)| Neighbor {
                index,
                distance: d2.sqrt(),
            })
            .collect()
    }

    /// The `k` nearest stored points to stored point `i`, excluding `i` itself.
    pub fn query_self(&self, i: usize, k: usize) -> Vec<Neighbor> {
        self.nearest(self.points.row(i), k, Some(i))
    }

    /// The `k` nearest stored points to an external query.
    pub fn query(&self, point: ArrayView1<f64>, k: usize) -> Vec<Neighbor> {
        self.nearest(point, k, None)
    }

    /// Leave-self-out neighbor lists for every stored point.
    pub fn all_self(&self, k: usize) -> Vec<Vec<Neighbor>> {
        (0..self.len()).into_par_iter().map(|i| self.query_self(i, k)).collect()
    }
}
