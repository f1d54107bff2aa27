//! Subcommand implementations. Every command overwrites its outputs, so a
//! rerun with the same config and seed reproduces the same files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use fairtrans::data::{write_csv as write_dataset, Dataset};
use fairtrans::experiment::{
    evaluate_baseline, evaluate_preprocessed, upstream_config, ModelEvaluation, RunEvaluation,
};
use fairtrans::metrics::{aggregate, Aggregate};
use fairtrans::preprocess::{train as train_preprocessor, TrainedPreprocessor};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{BudgetPoint, ExperimentConfig};
use crate::output::{
    consistency, hypervolumes, read_meta, read_sweep, write_csv, write_json, write_meta, Stamp, SweepRow,
};

/// Method name of jointly pre-processed rows in sweep outputs.
pub const METHOD: &str = "preprocessed";

pub const BUNDLE_DIR: &str = "bundle";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const HV_CSV: &str = "hv.csv";
pub const CONSISTENCY_CSV: &str = "consistency.csv";

fn echo(cfg: &ExperimentConfig) -> Result<Value> {
    Ok(serde_json::to_value(cfg)?)
}

fn load_bundle(dir: &Path) -> Result<TrainedPreprocessor> {
    TrainedPreprocessor::load(dir).with_context(|| format!("loading bundle {}", dir.display()))
}

pub fn train(cfg: &ExperimentConfig) -> Result<()> {
    let (tr, _) = cfg.data.load(0)?;
    log::info!("training on {} rows", tr.len());
    let pp = train_preprocessor(&tr, &cfg.preprocessor_for(0))?;
    let bundle = cfg.out.join(BUNDLE_DIR);
    pp.save(&bundle)?;
    write_json(
        &cfg.out.join("traces.json"),
        &Stamp::new("train"),
        &echo(cfg)?,
        &json!({ "traces": pp.traces() }),
    )?;
    if let Some(last) = pp.traces().last() {
        log::info!(
            "epoch {}: loss {:.4}, R {:.4}, delta_x {:.4?}, delta_y {:.4}",
            last.epoch,
            last.upstream_loss,
            last.r_value,
            last.delta_x,
            last.delta_y
        );
    }
    log::info!("bundle written to {}", bundle.display());
    Ok(())
}

pub fn transform(cfg: &ExperimentConfig, bundle: &Path) -> Result<()> {
    let pp = load_bundle(bundle)?;
    let (tr, te) = cfg.data.load(0)?;
    let dir = cfg.out.join("transformed");
    fs::create_dir_all(&dir)?;
    let (stamp, config) = (Stamp::new("transform"), echo(cfg)?);
    for (name, d) in [("train.csv", &tr), ("test.csv", &te)] {
        let path = dir.join(name);
        write_dataset(&pp.transform(d)?, &path)?;
        write_meta(&path, &stamp, &config)?;
    }
    tr.schema.save(dir.join("schema.json"))?;
    log::info!("transformed splits written to {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct RunReport<'a> {
    run: usize,
    models: Vec<&'a ModelEvaluation>,
}

/// Across-run `mean ± 2·SE` of one metric of one model.
#[derive(Debug, Serialize)]
pub struct MetricAggregate {
    pub model: String,
    pub metric: String,
    #[serde(flatten)]
    pub value: Aggregate,
}

type Pick = fn(&ModelEvaluation) -> Option<f64>;

const AGGREGATED: [(&str, Pick); 9] = [
    ("auc", |m| m.report.auc),
    ("sp", |m| m.report.sp),
    ("eo", |m| m.report.eo),
    ("ks_sp", |m| m.report.ks_sp),
    ("ks_eo", |m| m.report.ks_eo),
    ("hgr_hat", |m| m.report.hgr_hat),
    ("loss", |m| Some(m.report.loss)),
    ("group_gap", |m| Some(m.report.group_gap)),
    ("fit_loss", |m| Some(m.fit_loss)),
];

/// Aggregates every metric that is defined in all runs, per model.
pub fn aggregate_runs(runs: &[RunEvaluation]) -> Result<Vec<MetricAggregate>> {
    let mut by_model: BTreeMap<&str, Vec<&ModelEvaluation>> = BTreeMap::new();
    for run in runs {
        for m in std::iter::once(&run.upstream).chain(&run.downstream) {
            by_model.entry(&m.report.model).or_default().push(m);
        }
    }
    let mut out = Vec::new();
    for (model, evals) in by_model {
        for (metric, pick) in AGGREGATED {
            let values: Vec<f64> = evals.iter().filter_map(|m| pick(m)).collect();
            if !values.is_empty() && values.len() == evals.len() {
                out.push(MetricAggregate {
                    model: model.to_string(),
                    metric: metric.to_string(),
                    value: aggregate(&values)?,
                });
            }
        }
    }
    Ok(out)
}

fn evaluate_run(
    cfg: &ExperimentConfig,
    run: usize,
    data: &(Dataset, Dataset),
    pp: Option<&TrainedPreprocessor>,
) -> Result<RunEvaluation> {
    let (tr, te) = data;
    let eval = cfg.evaluation_for(run);
    Ok(match pp {
        Some(pp) => evaluate_preprocessed(pp, tr, te, &eval)?,
        None => evaluate_baseline(tr, te, &upstream_config(&cfg.preprocessor_for(run), tr.task()), &eval)?,
    })
}

/// Evaluates the bundle (or, without one, the untransformed baseline) on
/// every run's split.
pub fn evaluate(cfg: &ExperimentConfig, bundle: Option<&Path>) -> Result<()> {
    let pp = bundle.map(load_bundle).transpose()?;
    let method = if pp.is_some() { METHOD } else { "baseline" };
    let mut runs = Vec::new();
    for r in 0..cfg.runs {
        log::info!("evaluating {method} run {r}");
        runs.push(evaluate_run(cfg, r, &cfg.data.load(r)?, pp.as_ref())?);
    }
    let body = json!({
        "method": method,
        "bundle": bundle,
        "runs": runs
            .iter()
            .enumerate()
            .map(|(r, e)| RunReport { run: r, models: std::iter::once(&e.upstream).chain(&e.downstream).collect() })
            .collect::<Vec<_>>(),
        "aggregate": aggregate_runs(&runs)?,
    });
    let path = cfg.out.join("reports").join(format!("evaluate_{method}.json"));
    write_json(&path, &Stamp::new("evaluate"), &echo(cfg)?, &body)?;
    log::info!("report written to {}", path.display());
    Ok(())
}

fn clear_sweep_reports(dir: &Path) -> Result<()> {
    if !dir.exists() {
        return Ok(());
    }
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if name.starts_with("sweep_") && name.ends_with(".json") {
            fs::remove_file(&path)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepReport<'a> {
    method: &'a str,
    budget: &'a BudgetPoint,
    run: usize,
    upstream: &'a ModelEvaluation,
    downstream: &'a [ModelEvaluation],
}

/// Trains one preprocessor per budget point and run, evaluates it, and
/// writes `sweep.csv` plus the hypervolume and consistency summaries.
pub fn sweep(cfg: &ExperimentConfig) -> Result<()> {
    let reports = cfg.out.join("reports");
    clear_sweep_reports(&reports)?;
    let (stamp, config) = (Stamp::new("sweep"), echo(cfg)?);
    let data: Vec<(Dataset, Dataset)> = (0..cfg.runs).map(|r| cfg.data.load(r)).collect::<Result<_>>()?;
    let points = cfg.sweep.points();
    let mut rows = Vec::new();
    for (b, point) in points.iter().enumerate() {
        let label = point.label();
        for (r, split) in data.iter().enumerate() {
            log::info!("budget {label} run {r}");
            let pp = train_preprocessor(&split.0, &point.apply(&cfg.preprocessor_for(r)))?;
            let eval = evaluate_run(cfg, r, split, Some(&pp))?;
            rows.extend(eval.reports().map(|rep| SweepRow::new(METHOD, &label, r, rep)));
            let doc = SweepReport {
                method: METHOD,
                budget: point,
                run: r,
                upstream: &eval.upstream,
                downstream: &eval.downstream,
            };
            write_json(&reports.join(format!("sweep_b{b}_r{r}.json")), &stamp, &config, &doc)?;
        }
    }
    write_csv(&cfg.out.join(SWEEP_CSV), &rows, &stamp, &config)?;
    report(&cfg.out)
}

/// Recomputes `hv.csv` and `consistency.csv` from `sweep.csv` in `out`.
pub fn report(out: &Path) -> Result<()> {
    let sweep_path = out.join(SWEEP_CSV);
    let rows = read_sweep(&sweep_path)?;
    let config = read_meta(&sweep_path)?.config;
    let stamp = Stamp::new("report");
    let hv = hypervolumes(&rows)?;
    let cons = consistency(&rows, &hv)?;
    write_csv(&out.join(HV_CSV), &hv, &stamp, &config)?;
    write_csv(&out.join(CONSISTENCY_CSV), &cons, &stamp, &config)?;
    log::info!(
        "{} sweep rows, {} fronts, {} consistency rows",
        rows.len(),
        hv.len(),
        cons.len()
    );
    Ok(())
}
