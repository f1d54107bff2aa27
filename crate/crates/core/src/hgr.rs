//! Hirschfeld–Gebelein–Rényi maximal correlation.
//!
//! Two routes are provided:
//!
//! * an exact oracle for discrete pairs: the second singular value of
//!   `Q_ij = P_ij / sqrt(p_i q_j)`;
//! * a neural estimator that maximizes the variational lower bound of the χ²
//!   divergence between the joint law and the product of marginals,
//!   `R_V = E_joint[V] − E_product[f*(V)]` with `f*(x) = x²/4 + x`.
//!   `R_V ≤ χ² ` and `ρ² ≤ χ²`, with equality for binary pairs.
//!
//! Product samples are formed by permuting the second variable inside a batch
//! (independence) or inside each stratum of equal outcome (separation).

use std::collections::BTreeMap;

use log::warn;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, AdamConfig, AdamState, DenseNet, Matrix};

/// Convex conjugate of the χ² generator.
#[inline]
pub fn f_star(x: f64) -> f64 {
    x * x / 4.0 + x
}

/// Joint probability table of two discrete variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    probs: Matrix,
}

impl DiscreteJoint {
    pub fn new(probs: Matrix) -> Result<Self> {
        if probs.data().iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Input("joint probabilities must be finite and ≥ 0".into()));
        }
        let total: f64 = probs.data().iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Input(format!("joint probabilities sum to {total}, not 1")));
        }
        let j = Self { probs };
        if j.row_marginal().iter().chain(&j.col_marginal()).any(|&m| m <= 0.0) {
            return Err(Error::Input("every category needs positive marginal mass".into()));
        }
        Ok(j)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Normalizes a nonnegative count table.
    pub fn from_counts(counts: &Matrix) -> Result<Self> {
        let total: f64 = counts.data().iter().sum();
        if !(total > 0.0) {
            return Err(Error::Input("count table is empty".into()));
        }
        let mut p = counts.map(|c| c / total);
        // renormalize so the sum is 1 to the last bit tolerance
        let s: f64 = p.data().iter().sum();
        p.scale(1.0 / s);
        Self::new(p)
    }

    pub fn probs(&self) -> &Matrix {
        &self.probs
    }

    pub fn shape(&self) -> (usize, usize) {
        self.probs.shape()
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        (0..self.probs.rows()).map(|i| self.probs.row(i).iter().sum()).collect()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        self.probs.column_sums()
    }

    /// Joint of `(u(S₁), S₂)` where `u` merges categories `a` and `b` of the first variable.
    pub fn merge_rows(&self, a: usize, b: usize) -> Result<Self> {
        let k = self.probs.rows();
        if a == b || a >= k || b >= k {
            return Err(Error::Input(format!("cannot merge rows {a} and {b} of {k}")));
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let rows: Vec<Vec<f64>> = (0..k)
            .filter(|&i| i != hi)
            .map(|i| {
                if i == lo {
                    self.probs
                        .row(lo)
                        .iter()
                        .zip(self.probs.row(hi))
                        .map(|(x, y)| x + y)
                        .collect()
                } else {
                    self.probs.row(i).to_vec()
                }
            })
            .collect();
        Self::from_rows(&rows)
    }

    pub fn transpose(&self) -> Self {
        Self {
            probs: self.probs.transpose(),
        }
    }

    /// Draws `n` category pairs.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(usize, usize)> {
        let cols = self.probs.cols();
        let cdf: Vec<f64> = self
            .probs
            .data()
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        (0..n)
            .map(|_| {
                let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
                let cell = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                (cell / cols, cell % cols)
            })
            .collect()
    }
}

/// Exact maximal correlation of a discrete pair.
pub fn hgr_exact_discrete(joint: &DiscreteJoint) -> f64 {
    let (k1, k2) = joint.shape();
    if k1 < 2 || k2 < 2 {
        return 0.0;
    }
    let (p, q) = (joint.row_marginal(), joint.col_marginal());
    let probs = joint.probs();
    let qmat = DMatrix::from_fn(k1, k2, |i, j| probs.get(i, j) / (p[i] * q[j]).sqrt());
    let mut sv: Vec<f64> = qmat.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv[1].clamp(0.0, 1.0)
}

fn quantile_codes(values: &[f64], bins: usize) -> (Vec<usize>, usize) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len();
    let raw: Vec<usize> = values
        .iter()
        .map(|v| sorted.partition_point(|s| s.total_cmp(v).is_lt()) * bins / n)
        .collect();
    let mut used: Vec<usize> = raw.clone();
    used.sort_unstable();
    used.dedup();
    let codes = raw.iter().map(|b| used.binary_search(b).expect("present")).collect();
    (codes, used.len())
}

/// Plug-in maximal correlation of two samples after quantile binning each
/// into at most `bins` levels (tied values share a level). Binary inputs are
/// kept as they are, so for two 0/1 vectors this is the empirical `|Corr|`.
pub fn hgr_binned(a: &[f64], b: &[f64], bins: usize) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Input("binned correlation needs aligned nonempty samples".into()));
    }
    if bins < 2 {
        return Err(Error::param("bins", "must be ≥ 2"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Input("binned correlation needs finite samples".into()));
    }
    let (ca, ka) = quantile_codes(a, bins);
    let (cb, kb) = quantile_codes(b, bins);
    let mut counts = Matrix::zeros(ka, kb);
    for (&i, &j) in ca.iter().zip(&cb) {
        counts.set(i, j, counts.get(i, j) + 1.0);
    }
    Ok(hgr_exact_discrete(&DiscreteJoint::from_counts(&counts)?))
}

/// χ²(P_joint ‖ P₁ ⊗ P₂).
pub fn chi2_divergence_exact(joint: &DiscreteJoint) -> f64 {
    let (p, q) = (joint.row_marginal(), joint.col_marginal());
    let probs = joint.probs();
    let mut s = 0.0;
    for (i, pi) in p.iter().enumerate() {
        for (j, qj) in q.iter().enumerate() {
            let pij = probs.get(i, j);
            s += pij * pij / (pi * qj);
        }
    }
    s - 1.0
}

/// Exact-expectation dual value of a tabulated critic `V(i, j)`.
pub fn chi2_dual_exact(joint: &DiscreteJoint, critic: &Matrix) -> Result<f64> {
    if critic.shape() != joint.shape() {
        return Err(Error::shape("critic table must match the joint table"));
    }
    let (p, q) = (joint.row_marginal(), joint.col_marginal());
    let mut joint_term = 0.0;
    let mut product_term = 0.0;
    for (i, pi) in p.iter().enumerate() {
        for (j, qj) in q.iter().enumerate() {
            let v = critic.get(i, j);
            joint_term += joint.probs().get(i, j) * v;
            product_term += pi * qj * f_star(v);
        }
    }
    Ok(joint_term - product_term)
}

/// Sample estimate `mean(V_joint) − mean(f*(V_product))`.
pub fn chi2_dual_objective(v_joint: &[f64], v_product: &[f64]) -> Result<f64> {
    if v_joint.is_empty() || v_product.is_empty() {
        return Err(Error::Input("dual objective needs non-empty samples".into()));
    }
    let a = v_joint.iter().sum::<f64>() / v_joint.len() as f64;
    let b = v_product.iter().map(|&v| f_star(v)).sum::<f64>() / v_product.len() as f64;
    Ok(a - b)
}

/// `sqrt(2 − 2ρ)`.
pub fn d_metric(rho: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::param("rho", format!("{rho} not in [0, 1]")));
    }
    Ok((2.0 - 2.0 * rho).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HgrEstimate {
    /// Dual objective value `R_V`.
    pub r_value: f64,
    /// `sqrt(clamp(R_V, 0, 1))`.
    pub rho_hat: f64,
    /// Scores were constant; the estimate is reported as 0.
    pub degenerate: bool,
    /// Some outcome stratum held a single row, so its permutation was the identity.
    pub singleton_strata: bool,
}

impl HgrEstimate {
    pub fn from_r(r_value: f64) -> Self {
        Self {
            r_value,
            rho_hat: r_value.clamp(0.0, 1.0).sqrt(),
            degenerate: false,
            singleton_strata: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for CriticConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64, 64],
            learning_rate: 1e-3,
            batch_size: 256,
            dropout: 0.0,
            seed: 0,
        }
    }
}

/// Critic `V(score, second[, outcome])` of the χ² dual.
#[derive(Debug, Clone)]
pub struct DualCritic {
    net: DenseNet,
    adam: AdamState,
    batch_size: usize,
}

impl DualCritic {
    /// `second_dim` is the encoded width of the second variable; `with_outcome`
    /// appends one outcome column for the separation critic.
    pub fn new(second_dim: usize, with_outcome: bool, config: &CriticConfig) -> Result<Self> {
        if config.batch_size < 2 {
            return Err(Error::param("batch_size", "critic needs batches of at least 2 rows"));
        }
        let mut dims = vec![1 + second_dim + usize::from(with_outcome)];
        dims.extend_from_slice(&config.hidden);
        dims.push(1);
        let net = DenseNet::new(&dims, Activation::Identity, config.dropout, config.seed)?;
        let adam = AdamState::for_net(&net, AdamConfig::with_lr(config.learning_rate))?;
        Ok(Self {
            net,
            adam,
            batch_size: config.batch_size,
        })
    }

    pub fn from_parts(net: DenseNet, adam_config: AdamConfig, batch_size: usize) -> Result<Self> {
        let adam = AdamState::for_net(&net, adam_config)?;
        Ok(Self { net, adam, batch_size })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn adam_config(&self) -> AdamConfig {
        self.adam.config
    }

    /// Stacks joint rows `(s_i, b_i[, y_i])` over product rows `(s_i, b_{π(i)}[, y_i])`.
    fn stacked_inputs(scores: &[f64], second: &Matrix, outcome: Option<&[f64]>, perm: &[usize]) -> Result<Matrix> {
        let n = scores.len();
        if second.rows() != n || perm.len() != n || outcome.is_some_and(|y| y.len() != n) {
            return Err(Error::shape("critic inputs must be row-aligned"));
        }
        let w = 1 + second.cols() + usize::from(outcome.is_some());
        let mut data = Vec::with_capacity(2 * n * w);
        for product in [false, true] {
            for i in 0..n {
                data.push(scores[i]);
                let src = if product { perm[i] } else { i };
                data.extend_from_slice(second.row(src));
                if let Some(y) = outcome {
                    data.push(y[i]);
                }
            }
        }
        Matrix::new(2 * n, w, data)
    }

    fn split_objective(v: &Matrix) -> Result<(f64, usize)> {
        let n = v.rows() / 2;
        let col = v.data();
        Ok((chi2_dual_objective(&col[..n], &col[n..])?, n))
    }

    /// Dual value on the given rows with the critic in inference mode.
    pub fn evaluate(&self, scores: &[f64], second: &Matrix, outcome: Option<&[f64]>, perm: &[usize]) -> Result<f64> {
        let input = Self::stacked_inputs(scores, second, outcome, perm)?;
        Ok(Self::split_objective(&self.net.predict(&input)?)?.0)
    }

    /// One gradient-ascent step on `R_V`; returns the value before the step.
    pub fn ascent_step(
        &mut self,
        scores: &[f64],
        second: &Matrix,
        outcome: Option<&[f64]>,
        perm: &[usize],
    ) -> Result<f64> {
        let (r, grads) = self.objective_gradients(scores, second, outcome, perm)?;
        self.adam.ascend_net(&mut self.net, &grads)?;
        Ok(r)
    }

    /// `R_V` and its gradient w.r.t. each score, without updating the critic.
    pub fn penalty_with_score_grad(
        &mut self,
        scores: &[f64],
        second: &Matrix,
        outcome: Option<&[f64]>,
        perm: &[usize],
    ) -> Result<(f64, Vec<f64>)> {
        let (r, grads) = self.objective_gradients(scores, second, outcome, perm)?;
        let n = scores.len();
        let g = &grads.input;
        let ds = (0..n).map(|i| g.get(i, 0) + g.get(n + i, 0)).collect();
        Ok((r, ds))
    }

    fn objective_gradients(
        &mut self,
        scores: &[f64],
        second: &Matrix,
        outcome: Option<&[f64]>,
        perm: &[usize],
    ) -> Result<(f64, crate::nn::Gradients)> {
        let input = Self::stacked_inputs(scores, second, outcome, perm)?;
        let v = self.net.forward(&input, true)?;
        let (r, n) = Self::split_objective(&v)?;
        let inv = 1.0 / n as f64;
        let upstream: Vec<f64> = v
            .data()
            .iter()
            .enumerate()
            .map(|(i, &vi)| if i < n { inv } else { -(vi / 2.0 + 1.0) * inv })
            .collect();
        let grads = self.net.backward(&Matrix::new(2 * n, 1, upstream)?)?;
        Ok((r, grads))
    }
}

/// Uniform permutation of `0..n`.
pub fn independence_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Permutation that shuffles indices only among rows with equal outcome.
/// The flag reports whether any stratum had a single row.
pub fn stratified_permutation<R: Rng + ?Sized>(outcome: &[f64], rng: &mut R) -> (Vec<usize>, bool) {
    let mut strata: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, y) in outcome.iter().enumerate() {
        strata.entry(y.to_bits()).or_default().push(i);
    }
    let mut perm: Vec<usize> = (0..outcome.len()).collect();
    let mut singleton = false;
    for members in strata.values() {
        singleton |= members.len() == 1;
        let mut shuffled = members.clone();
        shuffled.shuffle(rng);
        for (&dst, &src) in members.iter().zip(&shuffled) {
            perm[dst] = src;
        }
    }
    (perm, singleton)
}

fn standardized(scores: &[f64]) -> Option<Vec<f64>> {
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    if !(var.sqrt() > 1e-12) {
        return None;
    }
    let sd = var.sqrt();
    Some(scores.iter().map(|s| (s - mean) / sd).collect())
}

const EVAL_PERMUTATIONS: usize = 5;

fn estimate<R: Rng + ?Sized>(
    scores: &[f64],
    second: &Matrix,
    outcome: Option<&[f64]>,
    critic: &mut DualCritic,
    steps: usize,
    rng: &mut R,
) -> Result<HgrEstimate> {
    let n = scores.len();
    if steps == 0 {
        return Err(Error::param("steps", "must be ≥ 1"));
    }
    if n < 2 || second.rows() != n || outcome.is_some_and(|y| y.len() != n) {
        return Err(Error::Input("estimator needs ≥ 2 row-aligned samples".into()));
    }
    let Some(z) = standardized(scores) else {
        warn!("constant scores: maximal correlation reported as 0");
        return Ok(HgrEstimate {
            r_value: 0.0,
            rho_hat: 0.0,
            degenerate: true,
            singleton_strata: false,
        });
    };
    let permute = |idx_outcome: Option<&[f64]>, m: usize, rng: &mut R| match idx_outcome {
        Some(y) => stratified_permutation(y, rng),
        None => (independence_permutation(m, rng), false),
    };
    let batch = critic.batch_size().min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut singleton = false;
    let mut cursor = n;
    for _ in 0..steps {
        if cursor + batch > n {
            order.shuffle(rng);
            cursor = 0;
        }
        let idx = &order[cursor..cursor + batch];
        cursor += batch;
        let bs: Vec<f64> = idx.iter().map(|&i| z[i]).collect();
        let bsec = second.select_rows(idx);
        let by: Option<Vec<f64>> = outcome.map(|y| idx.iter().map(|&i| y[i]).collect());
        let (perm, single) = permute(by.as_deref(), batch, rng);
        singleton |= single;
        critic.ascent_step(&bs, &bsec, by.as_deref(), &perm)?;
    }
    let mut r = 0.0;
    for _ in 0..EVAL_PERMUTATIONS {
        let (perm, single) = permute(outcome, n, rng);
        singleton |= single;
        r += critic.evaluate(&z, second, outcome, &perm)?;
    }
    let mut est = HgrEstimate::from_r(r / EVAL_PERMUTATIONS as f64);
    est.singleton_strata = singleton;
    if singleton {
        warn!("an outcome stratum held a single row; its permutation is the identity");
    }
    Ok(est)
}

/// Trains `critic` for `steps` mini-batch ascent steps on the independence dual
/// between `scores` and `sensitive`, then evaluates it on the full sample.
pub fn estimate_hgr_independence<R: Rng + ?Sized>(
    scores: &[f64],
    sensitive: &Matrix,
    critic: &mut DualCritic,
    steps: usize,
    rng: &mut R,
) -> Result<HgrEstimate> {
    estimate(scores, sensitive, None, critic, steps, rng)
}

/// Separation variant: product samples draw the sensitive rows from the same
/// outcome stratum and the critic also sees the outcome.
pub fn estimate_hgr_separation<R: Rng + ?Sized>(
    scores: &[f64],
    sensitive: &Matrix,
    outcome: &[f64],
    critic: &mut DualCritic,
    steps: usize,
    rng: &mut R,
) -> Result<HgrEstimate> {
    estimate(scores, sensitive, Some(outcome), critic, steps, rng)
}

/// Standardized one-column matrix of `values`, for estimating the correlation
/// between two score vectors. Constant input gives a column of zeros.
pub fn standardized_column(values: &[f64]) -> Matrix {
    match standardized(values) {
        Some(z) => Matrix::column_vector(&z),
        None => Matrix::zeros(values.len(), 1),
    }
}

/// Estimates `ρ(scores, second)` with a fresh critic (default architecture,
/// seeded by `seed`) trained for `steps` ascent steps.
pub fn estimate_hgr(scores: &[f64], second: &Matrix, steps: usize, seed: u64) -> Result<HgrEstimate> {
    use rand::SeedableRng;
    let config = CriticConfig {
        seed,
        ..CriticConfig::default()
    };
    let mut critic = DualCritic::new(second.cols(), false, &config)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    estimate_hgr_independence(scores, second, &mut critic, steps, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn product_joint_has_zero_correlation() {
        let p = [0.3, 0.7];
        let q = [0.2, 0.5, 0.3];
        let rows: Vec<Vec<f64>> = p.iter().map(|a| q.iter().map(|b| a * b).collect()).collect();
        let j = DiscreteJoint::from_rows(&rows).unwrap();
        assert!(hgr_exact_discrete(&j) < 1e-12);
        assert!(chi2_divergence_exact(&j).abs() < 1e-12);
    }

    #[test]
    fn permutation_joint_has_unit_correlation() {
        let j = DiscreteJoint::from_rows(&[[0.0, 0.5, 0.0], [0.0, 0.0, 0.2], [0.3, 0.0, 0.0]]).unwrap();
        assert!((hgr_exact_discrete(&j) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn binary_joint_matches_pearson() {
        let j = DiscreteJoint::from_rows(&[[0.4, 0.1], [0.1, 0.4]]).unwrap();
        // Corr of two Bernoulli(0.5): (P11 − p q) / sqrt(p(1−p) q(1−q))
        let pearson = (0.4 - 0.5 * 0.5) / (0.5f64 * 0.5 * 0.5 * 0.5).sqrt();
        assert!((hgr_exact_discrete(&j) - pearson).abs() < 1e-12);
        assert!((hgr_exact_discrete(&j) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn invalid_joints_rejected() {
        assert!(DiscreteJoint::from_rows(&[[0.5, 0.5], [0.0, 0.0]]).is_err());
        assert!(DiscreteJoint::from_rows(&[[0.5, 0.6]]).is_err());
        assert!(DiscreteJoint::from_rows(&[[-0.5, 1.5]]).is_err());
    }

    #[test]
    fn dual_objective_arithmetic() {
        assert_eq!(chi2_dual_objective(&[0.0, 0.0], &[0.0]).unwrap(), 0.0);
        assert_eq!(chi2_dual_objective(&[2.0], &[2.0]).unwrap(), -1.0);
        assert!(chi2_dual_objective(&[], &[1.0]).is_err());
    }

    #[test]
    fn optimal_tabulated_critic_attains_chi2() {
        // V* = 2(P/(pq) − 1) maximizes the dual pointwise.
        let j = DiscreteJoint::from_rows(&[[0.2, 0.1, 0.05], [0.05, 0.3, 0.3]]).unwrap();
        let (p, q) = (j.row_marginal(), j.col_marginal());
        let mut v = Matrix::zeros(2, 3);
        for i in 0..2 {
            for k in 0..3 {
                v.set(i, k, 2.0 * (j.probs().get(i, k) / (p[i] * q[k]) - 1.0));
            }
        }
        let dual = chi2_dual_exact(&j, &v).unwrap();
        assert!((dual - chi2_divergence_exact(&j)).abs() < 1e-12);
    }

    #[test]
    fn binned_binary_pair_is_abs_pearson() {
        let a = [0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0];
        let b = [0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        let sd = |v: &[f64], m: f64| (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
        let pearson = cov / (sd(&a, ma) * sd(&b, mb));
        assert!((hgr_binned(&a, &b, 5).unwrap() - pearson.abs()).abs() < 1e-12);
    }

    #[test]
    fn binned_monotone_pair_is_one_and_constant_is_zero() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let b: Vec<f64> = a.iter().map(|v| v.powi(3)).collect();
        assert!((hgr_binned(&a, &b, 5).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(hgr_binned(&a, &[2.0; 100], 5).unwrap(), 0.0);
    }

    #[test]
    fn d_metric_values() {
        assert_eq!(d_metric(1.0).unwrap(), 0.0);
        assert!((d_metric(0.0).unwrap() - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(d_metric(0.5).unwrap(), 1.0);
        assert!(d_metric(1.2).is_err());
        assert!(d_metric(-0.1).is_err());
    }

    #[test]
    fn stratified_permutation_stays_in_stratum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = [0.0, 1.0, 0.0, 1.0, 1.0, 2.0];
        let (perm, single) = stratified_permutation(&y, &mut rng);
        assert!(single);
        let mut seen = perm.clone();
        seen.sort();
        assert_eq!(seen, (0..6).collect::<Vec<_>>());
        for (i, &j) in perm.iter().enumerate() {
            assert_eq!(y[i], y[j]);
        }
        assert_eq!(perm[5], 5);
    }

    #[test]
    fn constant_scores_are_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut critic = DualCritic::new(2, false, &CriticConfig::default()).unwrap();
        let a = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        let est = estimate_hgr_independence(&[0.3; 3], &a, &mut critic, 1, &mut rng).unwrap();
        assert!(est.degenerate);
        assert_eq!(est.rho_hat, 0.0);
    }

    #[test]
    fn score_gradient_matches_finite_difference() {
        let cfg = CriticConfig {
            hidden: vec![8, 8],
            seed: 3,
            ..CriticConfig::default()
        };
        let mut critic = DualCritic::new(2, false, &cfg).unwrap();
        let scores = vec![0.2, -0.5, 1.3, 0.7];
        let a = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        let perm = vec![2, 0, 3, 1];
        let (_, g) = critic.penalty_with_score_grad(&scores, &a, None, &perm).unwrap();
        for i in 0..scores.len() {
            let (mut up, mut dn) = (scores.clone(), scores.clone());
            up[i] += 1e-6;
            dn[i] -= 1e-6;
            let fd = (critic.evaluate(&up, &a, None, &perm).unwrap() - critic.evaluate(&dn, &a, None, &perm).unwrap())
                / 2e-6;
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + fd.abs()), "{fd} vs {}", g[i]);
        }
    }
}
