//! Brute-force k-nearest-neighbour averaging.

use crate::error::{Error, Result};
use crate::nn::Matrix;

#[derive(Debug, Clone)]
pub(super) struct Knn {
    x: Matrix,
    y: Vec<f64>,
    k: usize,
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[f64], k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("knn_k", "must be ≥ 1"));
        }
        Ok(Self {
            x: x.clone(),
            y: y.to_vec(),
            k: k.min(y.len()),
        })
    }

    /// Mean outcome of the `k` nearest training rows (Euclidean); distance
    /// ties go to the lower training index.
    pub fn score(&self, q: &Matrix) -> Result<Vec<f64>> {
        if q.cols() != self.x.cols() {
            return Err(Error::shape("knn query width differs from training width"));
        }
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(self.y.len());
        Ok((0..q.rows())
            .map(|r| {
                let row = q.row(r);
                dist.clear();
                dist.extend((0..self.x.rows()).map(|i| {
                    let d: f64 = self.x.row(i).iter().zip(row).map(|(a, b)| (a - b).powi(2)).sum();
                    (d, i)
                }));
                let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                if self.k < dist.len() {
                    dist.select_nth_unstable_by(self.k - 1, cmp);
                }
                dist[..self.k].iter().map(|&(_, i)| self.y[i]).sum::<f64>() / self.k as f64
            })
            .collect())
    }
}
