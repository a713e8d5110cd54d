//! Extreme learning machine: a fixed random hidden layer followed by a
//! least-squares readout.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BaselineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElmParams {
    pub n_hidden: usize,
    pub activation: Activation,
    /// Ridge term relative to the largest squared singular value of the
    /// centred hidden-layer matrix.
    pub ridge: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elm {
    activation: Activation,
    /// `n_hidden` rows of input weights.
    input_weights: Vec<Vec<f64>>,
    hidden_bias: Vec<f64>,
    output_weights: Vec<f64>,
    output_bias: f64,
}

impl Elm {
    fn hidden(&self, row: &[f64]) -> Vec<f64> {
        self.input_weights
            .iter()
            .zip(&self.hidden_bias)
            .map(|(w, b)| self.activation.apply(b + w.iter().zip(row).map(|(a, x)| a * x).sum::<f64>()))
            .collect()
    }

    pub fn fit(rows: &[Vec<f64>], y: &[f64], p: &ElmParams) -> Result<Self, BaselineError> {
        if rows.is_empty() {
            return Err(BaselineError::EmptyTrainingSet);
        }
        if p.n_hidden == 0 || p.ridge < 0.0 {
            return Err(BaselineError::InvalidHyperparameter(
                "ELM needs n_hidden >= 1 and ridge >= 0".into(),
            ));
        }
        let d = rows[0].len();
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let input_weights: Vec<Vec<f64>> = (0..p.n_hidden)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let hidden_bias: Vec<f64> = (0..p.n_hidden).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut elm = Elm {
            activation: p.activation,
            input_weights,
            hidden_bias,
            output_weights: vec![0.0; p.n_hidden],
            output_bias: 0.0,
        };

        let n = rows.len();
        let h_rows: Vec<Vec<f64>> = rows.iter().map(|r| elm.hidden(r)).collect();
        let mut h = DMatrix::from_fn(n, p.n_hidden, |i, j| h_rows[i][j]);
        let h_mean: Vec<f64> = (0..p.n_hidden).map(|j| h.column(j).sum() / n as f64).collect();
        for j in 0..p.n_hidden {
            h.column_mut(j).add_scalar_mut(-h_mean[j]);
        }
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let yc = DVector::from_iterator(n, y.iter().map(|t| t - y_mean));

        // Ridge-stabilised pseudo-inverse: beta = V diag(s / (s^2 + lambda)) U^T y.
        let svd = h.svd(true, true);
        let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
        let s_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let lambda = p.ridge * s_max * s_max;
        let uty = u.transpose() * yc;
        let mut beta = DVector::zeros(p.n_hidden);
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s <= s_max * 1e-14 {
                continue;
            }
            let coef = s / (s * s + lambda) * uty[k];
            beta += vt.row(k).transpose() * coef;
        }
        elm.output_weights = beta.iter().copied().collect();
        elm.output_bias = y_mean - beta.iter().zip(&h_mean).map(|(b, m)| b * m).sum::<f64>();
        Ok(elm)
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.output_bias
            + self
                .hidden(row)
                .iter()
                .zip(&self.output_weights)
                .map(|(h, b)| h * b)
                .sum::<f64>()
    }
}
