//! Downstream model zoo fitted on (transformed) covariates.
//!
//! No model here ever receives the sensitive columns: every entry point takes
//! the covariate matrix and the outcome only.

mod features;
mod knn;
mod linear;

use serde::{Deserialize, Serialize};

pub use features::FeatureMap;

use crate::data::Task;
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::preprocess::{LossKind, SupervisedConfig, SupervisedModel};
use knn::Knn;
use linear::Linear;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Logistic regression (least squares for regression tasks).
    LogisticRegression,
    Knn,
    SmallMlp,
    /// Linear model on random Fourier features.
    RandomFeatureLinear,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::LogisticRegression,
        ModelKind::Knn,
        ModelKind::SmallMlp,
        ModelKind::RandomFeatureLinear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "logistic_regression",
            ModelKind::Knn => "knn",
            ModelKind::SmallMlp => "small_mlp",
            ModelKind::RandomFeatureLinear => "random_feature_linear",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DownstreamParams {
    pub knn_k: usize,
    /// Hidden widths of `small_mlp`; half of the upstream widths by convention.
    pub mlp_hidden: Vec<usize>,
    pub mlp_epochs: usize,
    pub mlp_batch_size: usize,
    pub mlp_learning_rate: f64,
    pub linear_iterations: usize,
    pub l2: f64,
    pub rff_features: usize,
    /// RBF kernel parameter `γ` in `exp(−γ‖x − x'‖²)`; `None` uses `1 / d`.
    pub rff_gamma: Option<f64>,
}

impl Default for DownstreamParams {
    fn default() -> Self {
        Self {
            knn_k: 15,
            mlp_hidden: vec![32, 32],
            mlp_epochs: 60,
            mlp_batch_size: 200,
            mlp_learning_rate: 1e-3,
            linear_iterations: 1000,
            l2: 1e-4,
            rff_features: 200,
            rff_gamma: None,
        }
    }
}

impl DownstreamParams {
    /// Defaults with `small_mlp` widths halved from `upstream_hidden`.
    pub fn halved_from(upstream_hidden: &[usize]) -> Self {
        Self {
            mlp_hidden: upstream_hidden.iter().map(|w| (w / 2).max(1)).collect(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.knn_k == 0 {
            return Err(Error::param("knn_k", "must be ≥ 1"));
        }
        if self.rff_features == 0 {
            return Err(Error::param("rff_features", "must be ≥ 1"));
        }
        if self.linear_iterations == 0 || self.mlp_epochs == 0 || self.mlp_batch_size == 0 {
            return Err(Error::param("linear_iterations", "iteration counts must be ≥ 1"));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::param("l2", "must be ≥ 0"));
        }
        if !(self.mlp_learning_rate > 0.0) {
            return Err(Error::param("mlp_learning_rate", "must be > 0"));
        }
        if self.rff_gamma.is_some_and(|g| !(g > 0.0)) {
            return Err(Error::param("rff_gamma", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Fitted {
    Linear(Linear),
    Knn(Knn),
    Mlp(Box<SupervisedModel>),
}

#[derive(Debug, Clone)]
pub struct DownstreamModel {
    kind: ModelKind,
    task: Task,
    features: FeatureMap,
    input_dim: usize,
    fitted: Fitted,
}

fn check_fit_inputs(x: &Matrix, y: &[f64], task: Task) -> Result<()> {
    if x.rows() != y.len() || y.is_empty() {
        return Err(Error::Input(format!(
            "{} covariate rows for {} outcomes",
            x.rows(),
            y.len()
        )));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite training data".into()));
    }
    if task == Task::Classification {
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Input("classification labels must be 0/1".into()));
        }
        if y.iter().all(|&v| v == y[0]) {
            return Err(Error::Input("classification labels contain a single class".into()));
        }
    }
    Ok(())
}

/// Fits `kind` on `(x, y)`.
pub fn fit(
    kind: ModelKind,
    x: &Matrix,
    y: &[f64],
    task: Task,
    params: &DownstreamParams,
    seed: u64,
) -> Result<DownstreamModel> {
    let features = match kind {
        ModelKind::RandomFeatureLinear => FeatureMap::random_fourier(
            x.cols(),
            params.rff_features,
            params.rff_gamma.unwrap_or(1.0 / x.cols().max(1) as f64),
            seed,
        )?,
        _ => FeatureMap::Identity,
    };
    compose(features, kind, x, y, task, params, seed)
}

/// Fits `kind` on `feature_map(x)`; the result scores raw covariates.
pub fn compose(
    feature_map: FeatureMap,
    kind: ModelKind,
    x: &Matrix,
    y: &[f64],
    task: Task,
    params: &DownstreamParams,
    seed: u64,
) -> Result<DownstreamModel> {
    params.validate()?;
    check_fit_inputs(x, y, task)?;
    let z = feature_map.apply(x)?;
    let fitted = match kind {
        ModelKind::LogisticRegression | ModelKind::RandomFeatureLinear => {
            Fitted::Linear(Linear::fit(&z, y, task, params.l2, params.linear_iterations)?)
        }
        ModelKind::Knn => Fitted::Knn(Knn::fit(&z, y, params.knn_k)?),
        ModelKind::SmallMlp => Fitted::Mlp(Box::new(SupervisedModel::fit(
            &z,
            y,
            task,
            &SupervisedConfig {
                hidden: params.mlp_hidden.clone(),
                epochs: params.mlp_epochs,
                batch_size: params.mlp_batch_size,
                learning_rate: params.mlp_learning_rate,
                dropout: 0.0,
                seed,
                loss: LossKind::for_task(task),
            },
        )?)),
    };
    Ok(DownstreamModel {
        kind,
        task,
        features: feature_map,
        input_dim: x.cols(),
        fitted,
    })
}

impl DownstreamModel {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn feature_map(&self) -> &FeatureMap {
        &self.features
    }

    /// `P(Y = 1)` for classification, the prediction for regression.
    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.input_dim {
            return Err(Error::shape(format!(
                "model fitted on {} columns, scored on {}",
                self.input_dim,
                x.cols()
            )));
        }
        let z = self.features.apply(x)?;
        match &self.fitted {
            Fitted::Linear(m) => m.score(&z),
            Fitted::Knn(m) => m.score(&z),
            Fitted::Mlp(m) => m.scores(&z),
        }
    }
}

/// Fits every kind in `kinds` on the same data.
pub fn fit_zoo(
    kinds: &[ModelKind],
    x: &Matrix,
    y: &[f64],
    task: Task,
    params: &DownstreamParams,
    seed: u64,
) -> Result<Vec<DownstreamModel>> {
    kinds.iter().map(|&k| fit(k, x, y, task, params, seed)).collect()
}
