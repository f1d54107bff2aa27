//! Linear models: logistic regression by accelerated full-batch gradient
//! descent, ridge least squares in closed form.

use nalgebra::{DMatrix, DVector};

use crate::data::Task;
use crate::error::{Error, Result};
use crate::nn::{sigmoid, Matrix};

const POWER_ITERATIONS: usize = 50;

#[derive(Debug, Clone)]
pub(super) struct Linear {
    weights: Vec<f64>,
    bias: f64,
    task: Task,
}

/// Largest eigenvalue of `AᵀA / n` for `A = [x, 1]`.
fn gram_spectral_norm(x: &Matrix) -> f64 {
    let (n, d) = x.shape();
    let mut v = vec![1.0 / ((d + 1) as f64).sqrt(); d + 1];
    let mut lambda = 1.0;
    for _ in 0..POWER_ITERATIONS {
        let mut av = vec![0.0; n];
        for (r, o) in av.iter_mut().enumerate() {
            *o = x.row(r).iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + v[d];
        }
        let mut w = vec![0.0; d + 1];
        for (r, &s) in av.iter().enumerate() {
            for (wj, xj) in w.iter_mut().zip(x.row(r)) {
                *wj += xj * s;
            }
            w[d] += s;
        }
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 1.0;
        }
        lambda = norm / n as f64;
        v = w.into_iter().map(|a| a / norm).collect();
    }
    lambda
}

impl Linear {
    pub fn fit(x: &Matrix, y: &[f64], task: Task, l2: f64, iterations: usize) -> Result<Self> {
        match task {
            Task::Classification => Self::fit_logistic(x, y, l2, iterations),
            Task::Regression => Self::fit_ridge(x, y, l2),
        }
    }

    fn fit_logistic(x: &Matrix, y: &[f64], l2: f64, iterations: usize) -> Result<Self> {
        let (n, d) = x.shape();
        let step = 1.0 / (gram_spectral_norm(x) / 4.0 + l2);
        // parameters are (w, b); Nesterov momentum on top of the 1/L step
        let mut theta = vec![0.0; d + 1];
        let mut prev = theta.clone();
        let mut grad = vec![0.0; d + 1];
        for t in 0..iterations {
            let mom = t as f64 / (t as f64 + 3.0);
            let look: Vec<f64> = theta.iter().zip(&prev).map(|(a, b)| a + mom * (a - b)).collect();
            grad.iter_mut().for_each(|g| *g = 0.0);
            for r in 0..n {
                let row = x.row(r);
                let z = row.iter().zip(&look).map(|(a, b)| a * b).sum::<f64>() + look[d];
                let e = (sigmoid(z) - y[r]) / n as f64;
                for (g, xj) in grad.iter_mut().zip(row) {
                    *g += e * xj;
                }
                grad[d] += e;
            }
            for j in 0..d {
                grad[j] += l2 * look[j];
            }
            prev = std::mem::replace(&mut theta, look.iter().zip(&grad).map(|(p, g)| p - step * g).collect());
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("logistic regression diverged".into()));
        }
        let bias = theta.pop().expect("bias entry");
        Ok(Self {
            weights: theta,
            bias,
            task: Task::Classification,
        })
    }

    fn fit_ridge(x: &Matrix, y: &[f64], l2: f64) -> Result<Self> {
        let (n, d) = x.shape();
        let a = DMatrix::from_fn(n, d + 1, |r, c| if c < d { x.get(r, c) } else { 1.0 });
        let mut gram = a.transpose() * &a;
        for j in 0..d {
            gram[(j, j)] += l2 * n as f64;
        }
        let rhs = a.transpose() * DVector::from_column_slice(y);
        let sol = match gram.clone().cholesky() {
            Some(c) => c.solve(&rhs),
            None => gram
                .svd(true, true)
                .solve(&rhs, 1e-12)
                .map_err(|e| Error::Input(format!("least squares failed: {e}")))?,
        };
        let mut theta: Vec<f64> = sol.iter().copied().collect();
        let bias = theta.pop().expect("bias entry");
        Ok(Self {
            weights: theta,
            bias,
            task: Task::Regression,
        })
    }

    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.weights.len() {
            return Err(Error::shape("linear model width mismatch"));
        }
        Ok((0..x.rows())
            .map(|r| {
                let z = x.row(r).iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.bias;
                match self.task {
                    Task::Classification => sigmoid(z),
                    Task::Regression => z,
                }
            })
            .collect())
    }
}
