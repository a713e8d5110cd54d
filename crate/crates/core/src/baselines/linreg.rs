use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::BaselineError;

/// Least squares with an optional ridge penalty on the slopes. The intercept
/// is not penalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRegression {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Penalty actually used, which exceeds the requested one when the
    /// singular-system fallback kicked in.
    pub effective_lambda: f64,
}

pub(crate) fn design(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let p = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j])
}

/// Solves `(A + lambda I) x = b` for symmetric positive semi-definite `A`,
/// growing `lambda` when the system is singular and `fallback` allows it.
pub(crate) fn solve_ridge(
    gram: &DMatrix<f64>,
    rhs: &DVector<f64>,
    lambda: f64,
    fallback: bool,
) -> Result<(DVector<f64>, f64), BaselineError> {
    let p = gram.nrows();
    if p == 0 {
        return Ok((DVector::zeros(0), lambda));
    }
    let scale = (gram.trace() / p as f64).max(f64::MIN_POSITIVE);
    let mut lam = lambda;
    for _ in 0..40 {
        let mut a = gram.clone();
        for i in 0..p {
            a[(i, i)] += lam;
        }
        if let Some(ch) = a.cholesky() {
            let l_diag_min = (0..p).map(|i| ch.l_dirty()[(i, i)]).fold(f64::INFINITY, f64::min);
            // Reject factorizations whose pivots collapsed to rounding noise.
            if l_diag_min * l_diag_min > scale * 1e-13 {
                return Ok((ch.solve(rhs), lam));
            }
        }
        if !fallback {
            return Err(BaselineError::SingularSystem);
        }
        lam = if lam == 0.0 { scale * 1e-10 } else { lam * 10.0 };
    }
    Err(BaselineError::SingularSystem)
}

impl LinearRegression {
    pub fn fit(
        rows: &[Vec<f64>],
        targets: &[f64],
        lambda: f64,
        singular_fallback: bool,
    ) -> Result<Self, BaselineError> {
        if rows.is_empty() {
            return Err(BaselineError::EmptyTrainingSet);
        }
        let n = rows.len() as f64;
        let x = design(rows);
        let p = x.ncols();
        let x_mean: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n).collect();
        let y_mean = targets.iter().sum::<f64>() / n;
        let mut xc = x;
        for j in 0..p {
            xc.column_mut(j).add_scalar_mut(-x_mean[j]);
        }
        let yc = DVector::from_iterator(targets.len(), targets.iter().map(|y| y - y_mean));
        let gram = xc.transpose() * &xc;
        let rhs = xc.transpose() * yc;
        let (w, effective_lambda) = solve_ridge(&gram, &rhs, lambda, singular_fallback)?;
        let intercept = y_mean - w.iter().zip(&x_mean).map(|(a, b)| a * b).sum::<f64>();
        Ok(LinearRegression {
            coefficients: w.iter().copied().collect(),
            intercept,
            effective_lambda,
        })
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }
}
