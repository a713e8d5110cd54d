//! CART regression tree grown greedily by squared-error reduction.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BaselineError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Fraction of features examined at each split; 1.0 examines all.
    pub feature_frac: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 8,
            min_leaf: 5,
            feature_frac: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

struct Builder<'a, R> {
    rows: &'a [Vec<f64>],
    y: &'a [f64],
    params: TreeParams,
    n_features: usize,
    rng: Option<&'a mut R>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl<R: Rng> Builder<'_, R> {
    fn features_to_try(&mut self) -> Vec<usize> {
        let d = self.n_features;
        match self.rng.as_deref_mut() {
            Some(rng) if self.params.feature_frac < 1.0 => {
                let m = ((d as f64 * self.params.feature_frac).ceil() as usize).clamp(1, d);
                let mut f = sample(rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<Candidate> {
        let n = idx.len();
        let min_leaf = self.params.min_leaf.max(1);
        if n < 2 * min_leaf {
            return None;
        }
        let mean = idx.iter().map(|&i| self.y[i]).sum::<f64>() / n as f64;
        let sst: f64 = idx.iter().map(|&i| (self.y[i] - mean).powi(2)).sum();
        if sst <= 0.0 {
            return None;
        }
        let mut best: Option<Candidate> = None;
        let mut order = idx.to_vec();
        for f in self.features_to_try() {
            order.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]).then(a.cmp(&b)));
            // Targets centred on the node mean: gain = S_l^2/n_l + S_r^2/n_r.
            let total: f64 = order.iter().map(|&i| self.y[i] - mean).sum();
            let mut left_sum = 0.0;
            for pos in 0..n - 1 {
                left_sum += self.y[order[pos]] - mean;
                let n_left = pos + 1;
                let n_right = n - n_left;
                if n_left < min_leaf || n_right < min_leaf {
                    continue;
                }
                let (lo, hi) = (self.rows[order[pos]][f], self.rows[order[pos + 1]][f]);
                if lo >= hi {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / n_right as f64;
                // Strictly better only, so earlier (feature, threshold) wins ties.
                if best.is_none_or(|b| gain > b.gain + 1e-12 * sst) {
                    best = Some(Candidate {
                        feature: f,
                        threshold: lo + (hi - lo) / 2.0,
                        gain,
                    });
                }
            }
        }
        best.filter(|b| b.gain > 1e-12 * sst)
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> usize {
        let slot = self.nodes.len();
        let value = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        self.nodes.push(Node::Leaf { value });
        if depth >= self.params.max_depth {
            return slot;
        }
        let Some(c) = self.best_split(idx) else {
            return slot;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.rows[i][c.feature] <= c.threshold);
        let left = self.grow(&l, depth + 1);
        let right = self.grow(&r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature: c.feature,
            threshold: c.threshold,
            left,
            right,
        };
        slot
    }
}

impl RegressionTree {
    pub fn fit(rows: &[Vec<f64>], y: &[f64], params: TreeParams) -> Result<Self, BaselineError> {
        Self::fit_with_rng::<rand_chacha::ChaCha8Rng>(rows, y, params, None)
    }

    /// `rng` drives per-split feature sampling when `feature_frac < 1`.
    pub fn fit_with_rng<R: Rng>(
        rows: &[Vec<f64>],
        y: &[f64],
        params: TreeParams,
        rng: Option<&mut R>,
    ) -> Result<Self, BaselineError> {
        if rows.is_empty() {
            return Err(BaselineError::EmptyTrainingSet);
        }
        if params.max_depth == 0 || !(params.feature_frac > 0.0 && params.feature_frac <= 1.0) {
            return Err(BaselineError::InvalidHyperparameter(
                "tree needs max_depth >= 1 and feature_frac in (0, 1]".into(),
            ));
        }
        let mut b = Builder {
            rows,
            y,
            params,
            n_features: rows[0].len(),
            rng,
            nodes: Vec::new(),
        };
        let all: Vec<usize> = (0..rows.len()).collect();
        b.grow(&all, 0);
        Ok(RegressionTree { nodes: b.nodes })
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}
