//! Fixed feature maps placed in front of a downstream model.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureMap {
    Identity,
    /// `z(x) = sqrt(2/D)·cos(xW + b)`, approximating the RBF kernel
    /// `exp(−γ‖x − x'‖²)` with `W ~ N(0, 2γ)` and `b ~ U[0, 2π)`.
    RandomFourier {
        frequencies: Matrix,
        offsets: Vec<f64>,
    },
}

impl FeatureMap {
    pub fn random_fourier(input_dim: usize, output_dim: usize, gamma: f64, seed: u64) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::param("rff_features", "dimensions must be ≥ 1"));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::param("rff_gamma", format!("{gamma} must be positive")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, (2.0 * gamma).sqrt()).expect("positive std");
        let w = (0..input_dim * output_dim).map(|_| normal.sample(&mut rng)).collect();
        let offsets = (0..output_dim).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        Ok(FeatureMap::RandomFourier {
            frequencies: Matrix::new(input_dim, output_dim, w)?,
            offsets,
        })
    }

    pub fn output_dim(&self, input_dim: usize) -> usize {
        match self {
            FeatureMap::Identity => input_dim,
            FeatureMap::RandomFourier { offsets, .. } => offsets.len(),
        }
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            FeatureMap::Identity => Ok(x.clone()),
            FeatureMap::RandomFourier { frequencies, offsets } => {
                let mut z = x.matmul(frequencies)?;
                let scale = (2.0 / offsets.len() as f64).sqrt();
                for r in 0..z.rows() {
                    for (v, b) in z.row_mut(r).iter_mut().zip(offsets) {
                        *v = scale * (*v + b).cos();
                    }
                }
                Ok(z)
            }
        }
    }
}
