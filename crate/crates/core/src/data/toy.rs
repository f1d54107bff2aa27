//! Synthetic generators.
//!
//! `toy_regression` draws `A ~ Bernoulli(0.5)`, `X | A ~ N(A, 1)`,
//! `ε ~ N(0, 0.1²)` and `Y = (2A − 1)·sin(X) + 2AX + ε`.
//!
//! `toy_classification` is a binary companion with a built-in group bias:
//!
//! * `A ~ Bernoulli(0.5)`
//! * `X1 | A ~ N(shift·A, 1)`, `X2 ~ N(0, 1)`
//! * `X3 ∈ {a, b, c}` with probabilities `(0.5, 0.3, 0.2)` if `A = 0` and
//!   `(0.2, 0.3, 0.5)` if `A = 1`
//! * `logit = signal·(X1 + 0.5·X2 + 0.5·[X3 = c] − 0.5·[X3 = a]) + bias·A − offset`
//! * `Y ~ Bernoulli(σ(logit))`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::{encode, Dataset, SplitTag};
use super::schema::{ColumnSpec, Role, Schema};
use crate::error::{Error, Result};
use crate::nn::sigmoid;

pub const TOY_TRAIN_SIZE: usize = 4500;
pub const TOY_TEST_SIZE: usize = 760;

fn check_n(n: usize) -> Result<()> {
    if n < 10 {
        return Err(Error::param("n", format!("{n} < 10 rows")));
    }
    Ok(())
}

pub fn toy_regression_schema() -> Schema {
    Schema::new(vec![
        ColumnSpec::continuous("x", Role::Covariate).raw(),
        ColumnSpec::categorical("a", Role::Sensitive, &["0", "1"]),
        ColumnSpec::continuous("y", Role::Outcome).raw(),
    ])
    .expect("static schema")
}

/// Mean of `Y` given `(X, A)` under the regression generator.
pub fn toy_regression_mean(x: f64, a: f64) -> f64 {
    (2.0 * a - 1.0) * x.sin() + 2.0 * a * x
}

fn regression_columns(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let std_normal = Normal::new(0.0, 1.0).expect("valid");
    let noise = Normal::new(0.0, 0.1).expect("valid");
    let (mut xs, mut as_, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let a = if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 };
        let x = a + std_normal.sample(rng);
        let y = toy_regression_mean(x, a) + noise.sample(rng);
        xs.push(x);
        as_.push(a);
        ys.push(y);
    }
    vec![xs, as_, ys]
}

pub fn toy_regression(n: usize, seed: u64) -> Result<Dataset> {
    check_n(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    encode(
        toy_regression_schema(),
        &regression_columns(n, &mut rng),
        SplitTag::Full,
    )
}

/// Independent training and test draws (`n_train`, `n_test`) from one seed.
pub fn toy_regression_split(n_train: usize, n_test: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    check_n(n_train)?;
    check_n(n_test)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = encode(
        toy_regression_schema(),
        &regression_columns(n_train, &mut rng),
        SplitTag::Train,
    )?;
    let test = encode(
        toy_regression_schema(),
        &regression_columns(n_test, &mut rng),
        SplitTag::Test,
    )?;
    Ok((train, test))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyClassification {
    pub shift: f64,
    pub signal: f64,
    pub bias: f64,
    pub offset: f64,
}

impl Default for ToyClassification {
    fn default() -> Self {
        Self {
            shift: 1.0,
            signal: 1.5,
            bias: 1.0,
            offset: 1.25,
        }
    }
}

impl ToyClassification {
    /// Weakly predictable variant: most of the outcome variation is noise.
    pub fn hard() -> Self {
        Self {
            shift: 1.0,
            signal: 0.35,
            bias: 1.0,
            offset: 0.7,
        }
    }

    pub fn schema() -> Schema {
        Schema::new(vec![
            ColumnSpec::continuous("x1", Role::Covariate).raw(),
            ColumnSpec::continuous("x2", Role::Covariate).raw(),
            ColumnSpec::categorical("x3", Role::Covariate, &["a", "b", "c"]),
            ColumnSpec::categorical("a", Role::Sensitive, &["0", "1"]),
            ColumnSpec::categorical("y", Role::Outcome, &["0", "1"]),
        ])
        .expect("static schema")
    }

    /// Probability that `Y = 1` given the covariates and group.
    pub fn probability(&self, x1: f64, x2: f64, x3: usize, a: f64) -> f64 {
        let cat = match x3 {
            0 => -0.5,
            2 => 0.5,
            _ => 0.0,
        };
        sigmoid(self.signal * (x1 + 0.5 * x2 + cat) + self.bias * a - self.offset)
    }

    fn columns(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let std_normal = Normal::new(0.0, 1.0).expect("valid");
        let mut cols: Vec<Vec<f64>> = (0..5).map(|_| Vec::with_capacity(n)).collect();
        for _ in 0..n {
            let a = if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 };
            let x1 = self.shift * a + std_normal.sample(rng);
            let x2 = std_normal.sample(rng);
            let probs = if a == 1.0 { [0.2, 0.3, 0.5] } else { [0.5, 0.3, 0.2] };
            let u: f64 = rng.random();
            let x3 = if u < probs[0] {
                0
            } else if u < probs[0] + probs[1] {
                1
            } else {
                2
            };
            let y = if rng.random::<f64>() < self.probability(x1, x2, x3, a) {
                1.0
            } else {
                0.0
            };
            for (c, v) in cols.iter_mut().zip([x1, x2, x3 as f64, a, y]) {
                c.push(v);
            }
        }
        cols
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        check_n(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        encode(Self::schema(), &self.columns(n, &mut rng), SplitTag::Full)
    }

    pub fn generate_split(&self, n_train: usize, n_test: usize, seed: u64) -> Result<(Dataset, Dataset)> {
        check_n(n_train)?;
        check_n(n_test)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = encode(Self::schema(), &self.columns(n_train, &mut rng), SplitTag::Train)?;
        let test = encode(Self::schema(), &self.columns(n_test, &mut rng), SplitTag::Test)?;
        Ok((train, test))
    }
}

pub fn toy_classification(n: usize, seed: u64) -> Result<Dataset> {
    ToyClassification::default().generate(n, seed)
}
