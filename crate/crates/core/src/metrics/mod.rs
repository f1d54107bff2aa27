//! Evaluation: utility and group-fairness metrics, trade-off analysis,
//! consistency across a model zoo and improvement diagnostics.

mod classification;
mod diagnostics;
mod ks;
mod pareto;
mod report;
mod summary;

pub use classification::{auc, choose_threshold, eo_ratio, group_mean_gap, mse, predict_labels, sp_ratio};
pub use diagnostics::{
    improvement_diagnostics, DownstreamQuantities, ImprovementDiagnostics, ModelDiagnostics, UpstreamBound,
    UpstreamQuantities,
};
pub use ks::{ks_eo, ks_sp, ks_statistic};
pub use pareto::{hypervolume_2d, pareto_front, scale_fairness, TradeoffPoint};
pub use report::{cross_entropy, fairness_report, FairnessReport};
pub use summary::{aggregate, consistency_score, popoviciu_check, Aggregate, PopoviciuCheck};
