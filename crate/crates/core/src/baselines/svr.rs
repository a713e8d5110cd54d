//! Linear epsilon-insensitive support vector regression trained by stochastic
//! subgradient descent on
//!
//! ```text
//! 0.5 * |w|^2 + C * sum_i max(0, |w.x_i + b - y_i| - eps)
//! ```
//!
//! Each epoch visits the samples in a seeded permutation. The step size decays
//! as `step / sqrt(epoch + 1)`, and the iterate with the lowest full objective
//! seen at an epoch boundary is returned.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BaselineError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub step: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvr {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
}

fn predict_with(w: &[f64], b: f64, row: &[f64]) -> f64 {
    b + w.iter().zip(row).map(|(a, x)| a * x).sum::<f64>()
}

pub fn objective(w: &[f64], b: f64, rows: &[Vec<f64>], y: &[f64], c: f64, eps: f64) -> f64 {
    let reg = 0.5 * w.iter().map(|a| a * a).sum::<f64>();
    let hinge: f64 = rows
        .iter()
        .zip(y)
        .map(|(r, &t)| ((predict_with(w, b, r) - t).abs() - eps).max(0.0))
        .sum();
    reg + c * hinge
}

impl LinearSvr {
    pub fn fit(rows: &[Vec<f64>], y: &[f64], p: &SvrParams) -> Result<Self, BaselineError> {
        if rows.is_empty() {
            return Err(BaselineError::EmptyTrainingSet);
        }
        if !(p.c >= 0.0 && p.epsilon >= 0.0 && p.step > 0.0) || p.epochs == 0 {
            return Err(BaselineError::InvalidHyperparameter(
                "SVR needs C >= 0, epsilon >= 0, step > 0 and at least one epoch".into(),
            ));
        }
        let n = rows.len();
        let d = rows[0].len();
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut best = (w.clone(), b, objective(&w, b, rows, y, p.c, p.epsilon));
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        for epoch in 0..p.epochs {
            let eta = p.step / ((epoch + 1) as f64).sqrt();
            order.shuffle(&mut rng);
            for &i in &order {
                let r = predict_with(&w, b, &rows[i]) - y[i];
                // Per-sample share of the objective: |w|^2 / (2n) + C * loss_i.
                let s = if r.abs() > p.epsilon { r.signum() } else { 0.0 };
                for (wj, xj) in w.iter_mut().zip(&rows[i]) {
                    *wj -= eta * (*wj / n as f64 + p.c * s * xj);
                }
                b -= eta * p.c * s;
            }
            let obj = objective(&w, b, rows, y, p.c, p.epsilon);
            if obj < best.2 {
                best = (w.clone(), b, obj);
            }
        }
        let (weights, bias, objective) = best;
        Ok(LinearSvr {
            weights,
            bias,
            objective,
        })
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        predict_with(&self.weights, self.bias, row)
    }
}
