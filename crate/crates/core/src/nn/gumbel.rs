//! Gumbel-softmax relaxation for one-hot outputs.

use rand::Rng;

use super::dense::softmax_in_place;
use super::Matrix;
use crate::error::{Error, Result};

/// Output of [`gumbel_softmax`]: the emitted rows plus the relaxed sample used
/// for the straight-through gradient.
#[derive(Debug, Clone)]
pub struct GumbelSample {
    pub output: Matrix,
    pub soft: Matrix,
}

/// Samples `softmax((logits + g) / temperature)` with i.i.d. standard Gumbel `g`.
/// With `hard`, rows are replaced by the one-hot of their argmax while the
/// gradient still flows through the relaxed sample.
pub fn gumbel_softmax<R: Rng + ?Sized>(
    logits: &Matrix,
    temperature: f64,
    hard: bool,
    rng: &mut R,
) -> Result<GumbelSample> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::param("temperature", format!("{temperature} must be positive")));
    }
    let mut soft = logits.clone();
    for r in 0..soft.rows() {
        let row = soft.row_mut(r);
        for v in row.iter_mut() {
            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            *v = (*v - (-u.ln()).ln()) / temperature;
        }
        softmax_in_place(row);
    }
    let output = if hard { one_hot_rows(&soft) } else { soft.clone() };
    Ok(GumbelSample { output, soft })
}

/// One-hot encoding of each row's argmax.
pub fn one_hot_rows(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for (r, j) in m.argmax_rows().into_iter().enumerate() {
        out.set(r, j, 1.0);
    }
    out
}

/// Gradient w.r.t. the logits given the gradient w.r.t. the (soft or
/// straight-through hard) output.
pub fn gumbel_softmax_backward(soft: &Matrix, grad_output: &Matrix, temperature: f64) -> Result<Matrix> {
    if soft.shape() != grad_output.shape() {
        return Err(Error::shape("gumbel gradient shape mismatch"));
    }
    let mut out = Matrix::zeros(soft.rows(), soft.cols());
    for r in 0..soft.rows() {
        let (s, g) = (soft.row(r), grad_output.row(r));
        let dot: f64 = s.iter().zip(g).map(|(a, b)| a * b).sum();
        for (o, (s, g)) in out.row_mut(r).iter_mut().zip(s.iter().zip(g)) {
            *o = s * (g - dot) / temperature;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_nonpositive_temperature() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let l = Matrix::zeros(1, 3);
        assert!(gumbel_softmax(&l, 0.0, false, &mut rng).is_err());
        assert!(gumbel_softmax(&l, -1.0, true, &mut rng).is_err());
    }

    #[test]
    fn hard_rows_are_one_hot() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = Matrix::from_rows(&[[0.3, -1.0, 2.0], [0.0, 0.0, 0.0]]).unwrap();
        let s = gumbel_softmax(&l, 0.5, true, &mut rng).unwrap();
        for r in 0..2 {
            let row = s.output.row(r);
            assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn high_temperature_uniform_logits_is_near_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let k = 4;
        let l = Matrix::zeros(10_000, k);
        let s = gumbel_softmax(&l, 1e3, false, &mut rng).unwrap();
        for r in 0..s.output.rows() {
            let row = s.output.row(r);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for &v in row {
                assert!((v - 1.0 / k as f64).abs() < 0.05);
            }
        }
    }

    #[test]
    fn dominant_logit_wins() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = Matrix::from_rows(&vec![[10.0, 0.0, 0.0]; 10_000]).unwrap();
        let s = gumbel_softmax(&l, 0.5, true, &mut rng).unwrap();
        let wins = s.output.argmax_rows().iter().filter(|&&j| j == 0).count();
        assert!(wins as f64 / 10_000.0 >= 0.99);
    }

    #[test]
    fn backward_matches_finite_difference_for_fixed_noise() {
        // With the noise held fixed the relaxed sample is softmax(z/τ); compare
        // the analytic gradient of Σ c·y against central differences.
        let tau = 0.7;
        let z = [0.2, -0.4, 1.1];
        let c = [1.0, -2.0, 0.5];
        let f = |z: &[f64]| {
            let mut row: Vec<f64> = z.iter().map(|v| v / tau).collect();
            softmax_in_place(&mut row);
            row.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut soft_row: Vec<f64> = z.iter().map(|v| v / tau).collect();
        softmax_in_place(&mut soft_row);
        let soft = Matrix::from_rows(&[soft_row]).unwrap();
        let g = gumbel_softmax_backward(&soft, &Matrix::from_rows(&[c]).unwrap(), tau).unwrap();
        for j in 0..3 {
            let (mut p, mut m) = (z, z);
            p[j] += 1e-6;
            m[j] -= 1e-6;
            let fd = (f(&p) - f(&m)) / 2e-6;
            assert!((fd - g.get(0, j)).abs() < 1e-7);
        }
    }
}
