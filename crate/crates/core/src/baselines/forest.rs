use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{RegressionTree, TreeParams};
use super::BaselineError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Rows drawn per tree, as a fraction of the training set.
    pub subsample: f64,
    /// Draw with replacement. Without it, `subsample = 1.0` gives every tree
    /// the full training set.
    pub bootstrap: bool,
    pub tree: TreeParams,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
}

fn tree_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl RandomForest {
    pub fn fit(rows: &[Vec<f64>], y: &[f64], p: &ForestParams) -> Result<Self, BaselineError> {
        if rows.is_empty() {
            return Err(BaselineError::EmptyTrainingSet);
        }
        if p.n_trees == 0 || !(p.subsample > 0.0 && p.subsample <= 1.0) {
            return Err(BaselineError::InvalidHyperparameter(
                "forest needs n_trees >= 1 and subsample in (0, 1]".into(),
            ));
        }
        let n = rows.len();
        let m = ((n as f64 * p.subsample).round() as usize).clamp(1, n);
        // Each tree owns a stream derived from (seed, tree index), so the
        // result does not depend on how rayon schedules the work.
        let trees = (0..p.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(p.seed, t));
                let idx: Vec<usize> = if p.bootstrap {
                    (0..m).map(|_| rng.random_range(0..n)).collect()
                } else if m == n {
                    (0..n).collect()
                } else {
                    let mut v = rand::seq::index::sample(&mut rng, n, m).into_vec();
                    v.sort_unstable();
                    v
                };
                let sub_rows: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
                let sub_y: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
                RegressionTree::fit_with_rng(&sub_rows, &sub_y, p.tree, Some(&mut rng))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RandomForest { trees })
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }
}
