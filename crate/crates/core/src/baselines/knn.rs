use serde::{Deserialize, Serialize};

use super::BaselineError;

/// Unweighted k-nearest-neighbour regression under Euclidean distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl Knn {
    pub fn fit(rows: &[Vec<f64>], targets: &[f64], k: usize) -> Result<Self, BaselineError> {
        if rows.is_empty() {
            return Err(BaselineError::EmptyTrainingSet);
        }
        if k == 0 {
            return Err(BaselineError::InvalidHyperparameter("k must be at least 1".into()));
        }
        if k > rows.len() {
            return Err(BaselineError::KExceedsTrainingSize { k, n: rows.len() });
        }
        Ok(Knn {
            k,
            rows: rows.to_vec(),
            targets: targets.to_vec(),
        })
    }

    /// Indices of the `k` nearest training rows; equal distances keep
    /// training order.
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        let mut by_dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (squared_distance(r, query), i))
            .collect();
        by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        by_dist.truncate(self.k);
        let mut idx: Vec<usize> = by_dist.into_iter().map(|(_, i)| i).collect();
        idx.sort_unstable();
        idx
    }

    pub fn predict(&self, query: &[f64]) -> f64 {
        // Summed in training order so k = n reproduces the global mean bit for bit.
        let sum: f64 = self.neighbors(query).iter().map(|&i| self.targets[i]).sum();
        sum / self.k as f64
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}
