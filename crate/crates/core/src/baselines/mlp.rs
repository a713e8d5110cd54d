//! One-hidden-layer perceptron (tanh units, linear output) trained by
//! full-batch gradient descent on mean squared error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BaselineError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub n_hidden: usize,
    pub epochs: usize,
    pub step: f64,
    pub seed: u64,
}

/// Parameters are stored flat: `W1` (row-major, `hidden x inputs`), `b1`,
/// `w2`, then the scalar `b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    n_inputs: usize,
    n_hidden: usize,
    params: Vec<f64>,
    /// Training loss after each epoch.
    pub loss_history: Vec<f64>,
}

impl Mlp {
    /// Seeded Glorot-uniform initialization.
    pub fn init(n_inputs: usize, n_hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a1 = (6.0 / (n_inputs + n_hidden) as f64).sqrt();
        let a2 = (6.0 / (n_hidden + 1) as f64).sqrt();
        let mut params = Vec::with_capacity(n_hidden * (n_inputs + 2) + 1);
        params.extend((0..n_hidden * n_inputs).map(|_| rng.random_range(-a1..=a1)));
        params.extend(std::iter::repeat_n(0.0, n_hidden));
        params.extend((0..n_hidden).map(|_| rng.random_range(-a2..=a2)));
        params.push(0.0);
        Mlp {
            n_inputs,
            n_hidden,
            params,
            loss_history: Vec::new(),
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.params.len(), "parameter vector length");
        self.params.copy_from_slice(params);
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], f64) {
        let (h, d) = (self.n_hidden, self.n_inputs);
        let (w1, rest) = self.params.split_at(h * d);
        let (b1, rest) = rest.split_at(h);
        let (w2, rest) = rest.split_at(h);
        (w1, b1, w2, rest[0])
    }

    fn hidden_into(&self, row: &[f64], out: &mut [f64]) {
        let (w1, b1, _, _) = self.split();
        for (j, a) in out.iter_mut().enumerate() {
            let w = &w1[j * self.n_inputs..(j + 1) * self.n_inputs];
            *a = (b1[j] + w.iter().zip(row).map(|(a, x)| a * x).sum::<f64>()).tanh();
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let (_, _, w2, b2) = self.split();
        let mut a = vec![0.0; self.n_hidden];
        self.hidden_into(row, &mut a);
        b2 + a.iter().zip(w2).map(|(a, w)| a * w).sum::<f64>()
    }

    pub fn loss(&self, rows: &[Vec<f64>], y: &[f64]) -> f64 {
        rows.iter().zip(y).map(|(r, t)| (self.predict(r) - t).powi(2)).sum::<f64>() / rows.len() as f64
    }

    /// Mean squared error and its gradient with respect to the flat parameters.
    pub fn loss_and_gradient(&self, rows: &[Vec<f64>], y: &[f64]) -> (f64, Vec<f64>) {
        let (h, d) = (self.n_hidden, self.n_inputs);
        let (_, _, w2, b2) = self.split();
        let n = rows.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let mut a = vec![0.0; h];
        for (row, &t) in rows.iter().zip(y) {
            self.hidden_into(row, &mut a);
            let out = b2 + a.iter().zip(w2).map(|(a, w)| a * w).sum::<f64>();
            let r = out - t;
            loss += r * r;
            let g = 2.0 * r / n;
            for j in 0..h {
                let dz = g * w2[j] * (1.0 - a[j] * a[j]);
                for k in 0..d {
                    grad[j * d + k] += dz * row[k];
                }
                grad[h * d + j] += dz;
                grad[h * d + h + j] += g * a[j];
            }
            grad[h * d + 2 * h] += g;
        }
        (loss / n, grad)
    }

    pub fn fit(rows: &[Vec<f64>], y: &[f64], p: &MlpParams) -> Result<Self, BaselineError> {
        if rows.is_empty() {
            return Err(BaselineError::EmptyTrainingSet);
        }
        if p.n_hidden == 0 || !(p.step > 0.0) {
            return Err(BaselineError::InvalidHyperparameter(
                "MLP needs n_hidden >= 1 and step > 0".into(),
            ));
        }
        let mut m = Mlp::init(rows[0].len(), p.n_hidden, p.seed);
        let diverged = |epoch: usize, loss: f64| BaselineError::DivergenceDetected {
            epoch,
            detail: format!("loss became {loss} with step {}", p.step),
        };
        // The loss returned with each gradient is the previous epoch's
        // post-update loss, so the forward pass runs once per epoch.
        for epoch in 0..p.epochs {
            let (loss, grad) = m.loss_and_gradient(rows, y);
            if epoch > 0 {
                if !loss.is_finite() {
                    return Err(diverged(epoch - 1, loss));
                }
                m.loss_history.push(loss);
            }
            for (w, g) in m.params.iter_mut().zip(&grad) {
                *w -= p.step * g;
            }
            if m.params.iter().any(|w| !w.is_finite()) {
                return Err(diverged(epoch, f64::NAN));
            }
        }
        if p.epochs > 0 {
            let loss = m.loss(rows, y);
            if !loss.is_finite() {
                return Err(diverged(p.epochs - 1, loss));
            }
            m.loss_history.push(loss);
        }
        Ok(m)
    }
}
