use serde::{Deserialize, Serialize};

use super::Samples;

/// Stored training set; Euclidean distance, majority vote.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

impl Knn {
    pub fn fit(data: &Samples, k: usize) -> Self {
        Knn {
            k,
            x: data.x.clone(),
            y: data.y.clone(),
        }
    }

    /// Indices of the `min(k, n)` nearest stored points, nearest first;
    /// equal distances keep storage order.
    pub fn neighbors(&self, v: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, p)| (sq_dist(p, v), i))
            .collect();
        let k = self.k.min(d.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k, cmp);
            d.truncate(k);
        }
        d.sort_unstable_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }

    pub fn votes(&self, v: &[f64], n_classes: usize) -> Vec<f64> {
        let mut votes = vec![0.0; n_classes];
        for i in self.neighbors(v) {
            votes[self.y[i]] += 1.0;
        }
        votes
    }

    pub(super) fn is_consistent(&self, n_features: usize, n_classes: usize) -> bool {
        self.k > 0
            && !self.x.is_empty()
            && self.x.len() == self.y.len()
            && self.x.iter().all(|r| r.len() == n_features)
            && self.y.iter().all(|&l| l < n_classes)
    }
}
