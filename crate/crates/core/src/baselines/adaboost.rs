//! AdaBoost.R2 (Drucker, 1997) with linear loss over shallow regression trees.
//!
//! Round `t`:
//! 1. draw `n` training indices with replacement, proportional to the sample
//!    weights (inverse-CDF on `rng.random::<f64>()`),
//! 2. fit a tree on the draw and compute `L_i = |err_i| / max_j |err_j|` on
//!    the full training set,
//! 3. `avg = sum_i p_i L_i`; stop if `avg >= 0.5` (the round is discarded
//!    unless it is the only one),
//! 4. `beta = avg / (1 - avg)`, `w_i *= beta^(1 - L_i)`, learner weight
//!    `ln(1 / beta)`.
//!
//! A round with `max_err = 0` fits the training set exactly; its learner
//! weight is infinite, so boosting stops and that learner decides every
//! prediction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{RegressionTree, TreeParams};
use super::BaselineError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostParams {
    pub n_rounds: usize,
    pub tree: TreeParams,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    /// A round fitted the training set exactly.
    DegenerateRound,
    /// A round's average loss reached 0.5.
    LossTooHigh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostR2 {
    learners: Vec<RegressionTree>,
    learner_weights: Vec<f64>,
    /// Index of a learner with zero training error, which outweighs all others.
    dominant: Option<usize>,
    pub stop: StopReason,
}

/// Smallest index whose cumulative weight exceeds `u * total`.
pub fn draw_index(cumulative: &[f64], u: f64) -> usize {
    let target = u * cumulative[cumulative.len() - 1];
    cumulative
        .partition_point(|&c| c <= target)
        .min(cumulative.len() - 1)
}

/// Weighted median: the smallest prediction whose cumulative weight (in
/// ascending prediction order, ties by round) reaches half the total.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let total: f64 = weights.iter().sum();
    let mut cum = 0.0;
    for &i in &order {
        cum += weights[i];
        if cum >= 0.5 * total {
            return values[i];
        }
    }
    values[order[order.len() - 1]]
}

impl AdaBoostR2 {
    pub fn fit(rows: &[Vec<f64>], y: &[f64], p: &AdaBoostParams) -> Result<Self, BaselineError> {
        if rows.is_empty() {
            return Err(BaselineError::EmptyTrainingSet);
        }
        if p.n_rounds == 0 {
            return Err(BaselineError::InvalidHyperparameter("n_rounds must be >= 1".into()));
        }
        let n = rows.len();
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let mut w = vec![1.0 / n as f64; n];
        let mut model = AdaBoostR2 {
            learners: Vec::new(),
            learner_weights: Vec::new(),
            dominant: None,
            stop: StopReason::Completed,
        };
        for _ in 0..p.n_rounds {
            let mut cumulative = Vec::with_capacity(n);
            let mut acc = 0.0;
            for wi in &w {
                acc += wi;
                cumulative.push(acc);
            }
            let idx: Vec<usize> = (0..n)
                .map(|_| draw_index(&cumulative, rng.random::<f64>()))
                .collect();
            let sub_rows: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
            let sub_y: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
            let tree = RegressionTree::fit(&sub_rows, &sub_y, p.tree)?;

            let err: Vec<f64> = rows.iter().zip(y).map(|(r, t)| (tree.predict(r) - t).abs()).collect();
            let max_err = err.iter().copied().fold(0.0, f64::max);
            if max_err == 0.0 {
                model.dominant = Some(model.learners.len());
                model.learners.push(tree);
                model.learner_weights.push(1.0);
                model.stop = StopReason::DegenerateRound;
                break;
            }
            let total_w: f64 = w.iter().sum();
            let loss: Vec<f64> = err.iter().map(|e| e / max_err).collect();
            let avg: f64 = loss.iter().zip(&w).map(|(l, wi)| l * wi / total_w).sum();
            if avg >= 0.5 {
                if model.learners.is_empty() {
                    model.learners.push(tree);
                    model.learner_weights.push(1.0);
                }
                model.stop = StopReason::LossTooHigh;
                break;
            }
            let beta = avg / (1.0 - avg);
            for (wi, l) in w.iter_mut().zip(&loss) {
                *wi *= beta.powf(1.0 - l);
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|wi| *wi /= s);
            model.learners.push(tree);
            model.learner_weights.push((1.0 / beta).ln());
        }
        Ok(model)
    }

    pub fn learners(&self) -> &[RegressionTree] {
        &self.learners
    }

    pub fn learner_weights(&self) -> &[f64] {
        &self.learner_weights
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        if let Some(d) = self.dominant {
            return self.learners[d].predict(row);
        }
        if self.learners.len() == 1 {
            return self.learners[0].predict(row);
        }
        let preds: Vec<f64> = self.learners.iter().map(|t| t.predict(row)).collect();
        weighted_median(&preds, &self.learner_weights)
    }
}
