//! End-to-end evaluation: fit the upstream model and the downstream zoo on a
//! (possibly transformed) training split and score them on a held-out split
//! against the original labels.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Task};
use crate::downstream::{fit, DownstreamParams, ModelKind};
use crate::error::{Error, Result};
use crate::hgr::{estimate_hgr, hgr_binned};
use crate::metrics::{
    fairness_report, improvement_diagnostics, predict_labels, DownstreamQuantities, FairnessReport,
    ImprovementDiagnostics, UpstreamQuantities,
};
use crate::nn::Matrix;
use crate::preprocess::{
    score_loss, LossKind, PreprocessorConfig, SupervisedConfig, SupervisedModel, TrainedPreprocessor,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub zoo: Vec<ModelKind>,
    pub downstream: DownstreamParams,
    /// Critic ascent steps per correlation estimate; 0 skips estimation.
    pub hgr_steps: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            zoo: ModelKind::ALL.to_vec(),
            downstream: DownstreamParams::default(),
            hgr_steps: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEvaluation {
    /// Held-out metrics against the original labels.
    pub report: FairnessReport,
    /// Loss on the training split the model was fitted to.
    pub fit_loss: f64,
    #[serde(skip)]
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEvaluation {
    pub upstream: ModelEvaluation,
    pub downstream: Vec<ModelEvaluation>,
    /// Outcome the models were scored against for `D̃`-side losses: `Ỹ` on
    /// the held-out split (equal to `Y` when no outcome converter exists).
    #[serde(skip)]
    pub target: Vec<f64>,
}

impl RunEvaluation {
    pub fn reports(&self) -> impl Iterator<Item = &FairnessReport> {
        std::iter::once(&self.upstream.report).chain(self.downstream.iter().map(|m| &m.report))
    }

    pub fn model(&self, name: &str) -> Option<&ModelEvaluation> {
        std::iter::once(&self.upstream)
            .chain(&self.downstream)
            .find(|m| m.report.model == name)
    }
}

/// Name used for the upstream model in reports.
pub const UPSTREAM: &str = "upstream";

/// Plain supervised model with the upstream architecture of `config`.
pub fn upstream_config(config: &PreprocessorConfig, task: Task) -> SupervisedConfig {
    SupervisedConfig {
        hidden: config.hidden.clone(),
        epochs: config.epochs,
        batch_size: config.batch_size,
        learning_rate: config.lr_h,
        dropout: config.dropout,
        seed: config.seed,
        loss: config.loss_for(task),
    }
}

fn hgr_with_groups(scores: &[f64], a: &Matrix, eval: &EvalConfig, salt: u64) -> Result<Option<f64>> {
    if eval.hgr_steps == 0 {
        return Ok(None);
    }
    Ok(Some(
        estimate_hgr(scores, a, eval.hgr_steps, eval.seed.wrapping_add(salt))?.rho_hat,
    ))
}

fn evaluate_scores(
    name: &str,
    task: Task,
    scores: Vec<f64>,
    fit_loss: f64,
    test: &Dataset,
    groups: &[usize],
    eval: &EvalConfig,
    salt: u64,
) -> Result<ModelEvaluation> {
    let hgr = hgr_with_groups(&scores, &test.a, eval, salt)?;
    Ok(ModelEvaluation {
        report: fairness_report(name, task, &scores, &test.y, groups, hgr)?,
        fit_loss,
        scores,
    })
}

fn fit_and_score(
    fit_x: &Matrix,
    fit_y: &[f64],
    eval_x: &Matrix,
    test: &Dataset,
    groups: &[usize],
    eval: &EvalConfig,
) -> Result<Vec<ModelEvaluation>> {
    let task = test.task();
    let loss = LossKind::for_task(task);
    eval.zoo
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            let m = fit(kind, fit_x, fit_y, task, &eval.downstream, eval.seed)?;
            let fit_loss = score_loss(loss, task, &m.score(fit_x)?, fit_y)?;
            evaluate_scores(
                kind.name(),
                task,
                m.score(eval_x)?,
                fit_loss,
                test,
                groups,
                eval,
                i as u64 + 1,
            )
        })
        .collect()
}

fn check_pair(train: &Dataset, test: &Dataset) -> Result<()> {
    if !train.schema.same_layout(&test.schema) {
        return Err(Error::Input("train and test schemas differ".into()));
    }
    Ok(())
}

/// Upstream and zoo trained on the original data.
pub fn evaluate_baseline(
    train: &Dataset,
    test: &Dataset,
    upstream: &SupervisedConfig,
    eval: &EvalConfig,
) -> Result<RunEvaluation> {
    check_pair(train, test)?;
    let task = train.task();
    let groups = test.sensitive_groups()?;
    let h = SupervisedModel::fit(&train.x, &train.y, task, upstream)?;
    let fit_loss = score_loss(upstream.loss, task, &h.scores(&train.x)?, &train.y)?;
    let up = evaluate_scores(UPSTREAM, task, h.scores(&test.x)?, fit_loss, test, &groups, eval, 0)?;
    Ok(RunEvaluation {
        upstream: up,
        downstream: fit_and_score(&train.x, &train.y, &test.x, test, &groups, eval)?,
        target: test.y.clone(),
    })
}

/// Jointly trained upstream `h̃*` and the zoo fitted on `(X̃, Ỹ)` of the
/// training split; held-out covariates are transformed by `G_X`.
pub fn evaluate_preprocessed(
    pp: &TrainedPreprocessor,
    train: &Dataset,
    test: &Dataset,
    eval: &EvalConfig,
) -> Result<RunEvaluation> {
    check_pair(train, test)?;
    let task = train.task();
    let groups = test.sensitive_groups()?;
    let tr = pp.transform(train)?;
    let te = pp.transform(test)?;
    let loss = pp.config().loss_for(task);
    let fit_loss = score_loss(loss, task, &pp.upstream_scores(&tr.x)?, &tr.y)?;
    let up = evaluate_scores(
        UPSTREAM,
        task,
        pp.upstream_scores(&te.x)?,
        fit_loss,
        test,
        &groups,
        eval,
        0,
    )?;
    Ok(RunEvaluation {
        upstream: up,
        downstream: fit_and_score(&tr.x, &tr.y, &te.x, test, &groups, eval)?,
        target: te.y,
    })
}

/// `ε̌`: held-out risk of a model that reads `X` and `A` jointly.
pub fn epsilon_check(train: &Dataset, test: &Dataset, upstream: &SupervisedConfig) -> Result<f64> {
    check_pair(train, test)?;
    let task = train.task();
    let xa_train = Matrix::hconcat(&[&train.x, &train.a])?;
    let xa_test = Matrix::hconcat(&[&test.x, &test.a])?;
    let h = SupervisedModel::fit(&xa_train, &train.y, task, upstream)?;
    score_loss(upstream.loss, task, &h.scores(&xa_test)?, &test.y)
}

/// Quantile levels for label and pair correlations of continuous outputs.
pub const DIAGNOSTIC_BINS: usize = 5;

/// What enters the label and pair distances: thresholded predictions for
/// classification, raw scores for regression.
fn decision(m: &ModelEvaluation, task: Task) -> Vec<f64> {
    match (task, m.report.threshold) {
        (Task::Classification, Some(t)) => predict_labels(&m.scores, t).into_iter().map(f64::from).collect(),
        _ => m.scores.clone(),
    }
}

/// Assembles the improvement diagnostics from a baseline and a transformed
/// evaluation on the same held-out split.
///
/// Correlations with `A` are neural estimates (`steps` critic steps each;
/// reported `hgr_hat` values are reused). Correlations between outputs and
/// labels, or between two outputs, are plug-in values on the contingency
/// table: classifiers are thresholded at their reported cut-off so both sides
/// are binary, regression scores are binned into [`DIAGNOSTIC_BINS`] quantile
/// levels. The χ² dual only bounds `ρ²` from above for such pairs and would
/// saturate.
pub fn diagnose(
    baseline: &RunEvaluation,
    transformed: &RunEvaluation,
    test: &Dataset,
    epsilon_check: f64,
    lambda_f: f64,
    slack: f64,
    steps: usize,
    seed: u64,
) -> Result<ImprovementDiagnostics> {
    if steps == 0 {
        return Err(Error::param("steps", "must be ≥ 1"));
    }
    let task = test.task();
    let loss = LossKind::for_task(task);
    let mut salt = 100u64;
    let mut rho = |s: &[f64], second: &Matrix| -> Result<f64> {
        salt += 1;
        Ok(estimate_hgr(s, second, steps, seed.wrapping_add(salt))?.rho_hat)
    };
    let rho_a = |m: &ModelEvaluation, rho: &mut dyn FnMut(&[f64], &Matrix) -> Result<f64>| match m.report.hgr_hat {
        Some(r) => Ok::<f64, Error>(r),
        None => rho(&m.scores, &test.a),
    };
    let corr = |a: &[f64], b: &[f64]| hgr_binned(a, b, DIAGNOSTIC_BINS);
    let up0 = &baseline.upstream;
    let up1 = &transformed.upstream;
    let upstream = UpstreamQuantities {
        rho_original: rho_a(up0, &mut rho)?,
        rho_transformed: rho_a(up1, &mut rho)?,
        loss_original: up0.report.loss,
        loss_transformed: score_loss(loss, task, &up1.scores, &transformed.target)?,
        loss_transformed_on_y: up1.report.loss,
        rho_label_original: corr(&decision(up0, task), &test.y)?,
        rho_label_transformed: corr(&decision(up1, task), &transformed.target)?,
    };
    let mut models = Vec::new();
    for m1 in &transformed.downstream {
        let name = &m1.report.model;
        let m0 = baseline
            .downstream
            .iter()
            .find(|m| &m.report.model == name)
            .ok_or_else(|| Error::Input(format!("baseline has no model `{name}`")))?;
        models.push(DownstreamQuantities {
            name: name.clone(),
            rho_original: rho_a(m0, &mut rho)?,
            rho_transformed: rho_a(m1, &mut rho)?,
            loss_original: m0.report.loss,
            loss_transformed: score_loss(loss, task, &m1.scores, &transformed.target)?,
            rho_pair: corr(&decision(up1, task), &decision(m1, task))?,
            rho_label: corr(&decision(m1, task), &transformed.target)?,
        });
    }
    improvement_diagnostics(&upstream, &models, epsilon_check, lambda_f, slack)
}
