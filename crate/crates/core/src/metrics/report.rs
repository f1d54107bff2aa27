//! Per-model evaluation report.

use serde::{Deserialize, Serialize};

use super::classification::{auc, choose_threshold, eo_ratio, group_mean_gap, mse, predict_labels, sp_ratio};
use super::ks::{ks_eo, ks_sp};
use crate::data::Task;
use crate::error::{Error, Result};
use crate::preprocess::PROB_CLIP;

/// Utility and fairness of one model's scores on one evaluation split.
///
/// Classification-only fields are `None` for regression, and any metric that
/// is undefined on the given data (e.g. an empty stratum) is `None` as well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub model: String,
    pub task: Task,
    pub n: usize,
    /// Clipped cross-entropy (classification) or squared error (regression).
    pub loss: f64,
    /// Spread of group-conditional mean scores.
    pub group_gap: f64,
    pub hgr_hat: Option<f64>,
    pub auc: Option<f64>,
    pub threshold: Option<f64>,
    pub sp: Option<f64>,
    pub eo: Option<f64>,
    pub ks_sp: Option<f64>,
    pub ks_eo: Option<f64>,
}

fn optional(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Metric(msg)) => {
            log::warn!("metric undefined: {msg}");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

pub fn cross_entropy(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::Metric("cross-entropy needs aligned nonempty vectors".into()));
    }
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| {
            let p = s.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / scores.len() as f64)
}

/// Evaluates `scores` against `labels` (0/1 or real) and group indices.
pub fn fairness_report(
    model: &str,
    task: Task,
    scores: &[f64],
    labels: &[f64],
    groups: &[usize],
    hgr_hat: Option<f64>,
) -> Result<FairnessReport> {
    if scores.len() != labels.len() || scores.len() != groups.len() || scores.is_empty() {
        return Err(Error::Input(
            "scores, labels and groups must be aligned and nonempty".into(),
        ));
    }
    let mut r = FairnessReport {
        model: model.to_string(),
        task,
        n: scores.len(),
        loss: 0.0,
        group_gap: group_mean_gap(scores, groups)?,
        hgr_hat,
        auc: None,
        threshold: None,
        sp: None,
        eo: None,
        ks_sp: optional(ks_sp(scores, groups))?,
        ks_eo: None,
    };
    match task {
        Task::Regression => r.loss = mse(scores, labels)?,
        Task::Classification => {
            r.loss = cross_entropy(scores, labels)?;
            r.auc = optional(auc(scores, labels))?;
            r.threshold = optional(choose_threshold(scores, labels))?;
            if let Some(t) = r.threshold {
                let pred = predict_labels(scores, t);
                r.sp = optional(sp_ratio(&pred, groups))?;
                r.eo = optional(eo_ratio(&pred, groups, labels))?;
            }
            r.ks_eo = optional(ks_eo(scores, groups, labels))?;
        }
    }
    Ok(r)
}
