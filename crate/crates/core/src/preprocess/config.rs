//! Trainer hyperparameters.

use serde::{Deserialize, Serialize};

use crate::data::{Schema, Task};
use crate::error::{Error, Result};

/// Covariate distortion budget: one value for every variable or one per
/// covariate column of the schema (in schema order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Budget {
    Uniform(f64),
    PerVariable(Vec<f64>),
}

impl Budget {
    /// Budget per covariate variable.
    pub fn resolve(&self, variables: usize) -> Result<Vec<f64>> {
        match self {
            Budget::Uniform(d) => Ok(vec![*d; variables]),
            Budget::PerVariable(v) if v.len() == variables => Ok(v.clone()),
            Budget::PerVariable(v) => Err(Error::param(
                "delta_x",
                format!("{} budgets for {variables} covariates", v.len()),
            )),
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            Budget::Uniform(d) => std::slice::from_ref(d),
            Budget::PerVariable(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessNotion {
    Independence,
    Separation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    SquaredError,
}

impl LossKind {
    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Classification => LossKind::CrossEntropy,
            Task::Regression => LossKind::SquaredError,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessorConfig {
    pub delta_x: Budget,
    pub delta_y: f64,
    pub lambda_f: f64,
    pub fairness: FairnessNotion,
    pub epochs: usize,
    pub batch_size: usize,
    /// Inner upstream/critic steps per converter step.
    pub t_prime: usize,
    /// Learning rate of the upstream model `h`.
    pub lr_h: f64,
    /// Learning rate of the critic `V`.
    pub lr_v: f64,
    /// Learning rate of both converters.
    pub lr_g: f64,
    /// Dual-ascent rate of the covariate multipliers.
    pub lr_x: f64,
    /// Dual-ascent rate of the outcome multiplier.
    pub lr_y: f64,
    pub seed: u64,
    /// Upstream loss; defaults to cross-entropy or squared error by task.
    pub loss: Option<LossKind>,
    pub hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub dropout: f64,
    pub gumbel_temperature: f64,
}

impl Default for PreprocessorConfig {
    fn default() -> Self {
        Self {
            delta_x: Budget::Uniform(0.1),
            delta_y: 0.0,
            lambda_f: 1.0,
            fairness: FairnessNotion::Independence,
            epochs: 60,
            batch_size: 200,
            t_prime: 1,
            lr_h: 1e-3,
            lr_v: 1e-3,
            lr_g: 1e-3,
            lr_x: 1.0,
            lr_y: 1.0,
            seed: 0,
            loss: None,
            hidden: vec![64, 64],
            critic_hidden: vec![64, 64, 64],
            dropout: 0.1,
            gumbel_temperature: 0.5,
        }
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::param(name, format!("{v} must be a finite value ≥ 0")));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::param(name, format!("{v} must be a finite value > 0")));
    }
    Ok(())
}

impl PreprocessorConfig {
    pub fn validate(&self) -> Result<()> {
        for &d in self.delta_x.values() {
            non_negative("delta_x", d)?;
        }
        if self.delta_x.values().is_empty() {
            return Err(Error::param("delta_x", "empty budget list"));
        }
        non_negative("delta_y", self.delta_y)?;
        non_negative("lambda_f", self.lambda_f)?;
        for (name, v) in [("lr_h", self.lr_h), ("lr_v", self.lr_v), ("lr_g", self.lr_g)] {
            positive(name, v)?;
        }
        non_negative("lr_x", self.lr_x)?;
        non_negative("lr_y", self.lr_y)?;
        positive("gumbel_temperature", self.gumbel_temperature)?;
        if self.epochs == 0 {
            return Err(Error::param("epochs", "must be ≥ 1"));
        }
        if self.batch_size < 2 {
            return Err(Error::param("batch_size", "must be ≥ 2"));
        }
        if self.t_prime == 0 {
            return Err(Error::param("t_prime", "must be ≥ 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::param("dropout", format!("{} not in [0, 1)", self.dropout)));
        }
        if self.hidden.contains(&0) {
            return Err(Error::param("hidden", "layer widths must be ≥ 1"));
        }
        if self.critic_hidden.contains(&0) {
            return Err(Error::param("critic_hidden", "layer widths must be ≥ 1"));
        }
        Ok(())
    }

    /// Checks the config against a dataset schema as well.
    pub fn validate_for(&self, schema: &Schema) -> Result<()> {
        self.validate()?;
        self.delta_x.resolve(schema.covariate_blocks().len())?;
        let task = schema.task();
        if self.fairness == FairnessNotion::Separation && task == Task::Regression {
            return Err(Error::param("fairness", "separation needs a categorical outcome"));
        }
        if self.loss == Some(LossKind::CrossEntropy) && task == Task::Regression {
            return Err(Error::param("loss", "cross_entropy needs a categorical outcome"));
        }
        Ok(())
    }

    pub fn loss_for(&self, task: Task) -> LossKind {
        self.loss.unwrap_or(LossKind::for_task(task))
    }
}
