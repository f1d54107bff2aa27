//! Output files. JSON documents embed a version stamp and the config echo;
//! every CSV gets a `<name>.meta.json` sidecar carrying the same.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use fairtrans::metrics::{consistency_score, hypervolume_2d, popoviciu_check, scale_fairness, FairnessReport};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamp {
    pub tool: String,
    pub version: String,
    pub command: String,
}

impl Stamp {
    pub fn new(command: &str) -> Self {
        Self {
            tool: "fairtrans".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct Meta {
    pub stamp: Stamp,
    pub config: Value,
}

/// Writes `{stamp, config, ..body}` as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, stamp: &Stamp, config: &Value, body: &T) -> Result<()> {
    let mut doc = serde_json::Map::new();
    doc.insert("stamp".into(), serde_json::to_value(stamp)?);
    doc.insert("config".into(), config.clone());
    match serde_json::to_value(body)? {
        Value::Object(m) => doc.extend(m),
        other => {
            doc.insert("body".into(), other);
        }
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(&Value::Object(doc))? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn sidecar(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

pub fn write_meta(path: &Path, stamp: &Stamp, config: &Value) -> Result<()> {
    let meta = Meta {
        stamp: stamp.clone(),
        config: config.clone(),
    };
    fs::write(sidecar(path), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

pub fn read_meta(path: &Path) -> Result<Meta> {
    let p = sidecar(path);
    let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], stamp: &Stamp, config: &Value) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    write_meta(path, stamp, config)
}

/// One line of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: String,
    pub budget: String,
    pub run: usize,
    pub model: String,
    pub auc: Option<f64>,
    pub sp: Option<f64>,
    pub eo: Option<f64>,
    pub ks_sp: Option<f64>,
    pub ks_eo: Option<f64>,
    /// Rows sharing this key form one hypervolume front.
    pub hv_group: String,
    pub loss: f64,
    pub group_gap: f64,
    pub hgr_hat: Option<f64>,
}

impl SweepRow {
    pub fn new(method: &str, budget: &str, run: usize, r: &FairnessReport) -> Self {
        Self {
            method: method.into(),
            budget: budget.into(),
            run,
            model: r.model.clone(),
            auc: r.auc,
            sp: r.sp,
            eo: r.eo,
            ks_sp: r.ks_sp,
            ks_eo: r.ks_eo,
            hv_group: format!("{method}/{}/{run}", r.model),
            loss: r.loss,
            group_gap: r.group_gap,
            hgr_hat: r.hgr_hat,
        }
    }
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// One line of `hv.csv`: the hypervolume of `(1 − AUC, scaled SP/EO)`
/// points of a group, reference `(1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvRow {
    pub hv_group: String,
    pub method: String,
    pub model: String,
    pub run: usize,
    pub points: usize,
    pub hv_sp: Option<f64>,
    pub hv_eo: Option<f64>,
}

/// Fairness values scaled by their maximum over every row of the sweep.
pub fn scaled_column(rows: &[SweepRow], pick: impl Fn(&SweepRow) -> Option<f64>) -> Vec<Option<f64>> {
    let present: Vec<f64> = rows.iter().filter_map(&pick).collect();
    let mut scaled = scale_fairness(&present).into_iter();
    rows.iter()
        .map(|r| pick(r).map(|_| scaled.next().expect("one per value")))
        .collect()
}

fn group_hv(rows: &[&SweepRow], idx: &[usize], scaled: &[Option<f64>]) -> Result<Option<f64>> {
    let mut pts = Vec::new();
    for (r, &i) in rows.iter().zip(idx) {
        match (r.auc, scaled[i]) {
            (Some(a), Some(f)) => pts.push((1.0 - a, f)),
            _ => return Ok(None),
        }
    }
    Ok(Some(hypervolume_2d(&pts, (1.0, 1.0))?))
}

pub fn hypervolumes(rows: &[SweepRow]) -> Result<Vec<HvRow>> {
    let sp = scaled_column(rows, |r| r.sp);
    let eo = scaled_column(rows, |r| r.eo);
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        groups.entry(&r.hv_group).or_default().push(i);
    }
    let mut out = Vec::new();
    for (key, idx) in groups {
        let members: Vec<&SweepRow> = idx.iter().map(|&i| &rows[i]).collect();
        out.push(HvRow {
            hv_group: key.to_string(),
            method: members[0].method.clone(),
            model: members[0].model.clone(),
            run: members[0].run,
            points: idx.len(),
            hv_sp: group_hv(&members, &idx, &sp)?,
            hv_eo: group_hv(&members, &idx, &eo)?,
        });
    }
    Ok(out)
}

/// One line of `consistency.csv`: spread of a metric across the models of
/// one (method, budget, run) cell. `budget` is `all` for hypervolumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub method: String,
    pub budget: String,
    pub run: usize,
    pub metric: String,
    pub models: usize,
    pub mean: f64,
    pub consistency: Option<f64>,
    pub variance: f64,
    pub popoviciu_bound: f64,
    pub popoviciu_holds: bool,
}

fn consistency_row(method: &str, budget: &str, run: usize, metric: &str, values: &[f64]) -> Result<ConsistencyRow> {
    let check = popoviciu_check(values)?;
    Ok(ConsistencyRow {
        method: method.into(),
        budget: budget.into(),
        run,
        metric: metric.into(),
        models: values.len(),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        consistency: consistency_score(values).ok(),
        variance: check.variance,
        popoviciu_bound: check.bound,
        popoviciu_holds: check.holds,
    })
}

type Metric = (&'static str, fn(&SweepRow) -> Option<f64>);

const METRICS: [Metric; 7] = [
    ("auc", |r| r.auc),
    ("sp", |r| r.sp),
    ("eo", |r| r.eo),
    ("ks_sp", |r| r.ks_sp),
    ("ks_eo", |r| r.ks_eo),
    ("loss", |r| Some(r.loss)),
    ("group_gap", |r| Some(r.group_gap)),
];

pub fn consistency(rows: &[SweepRow], hv: &[HvRow]) -> Result<Vec<ConsistencyRow>> {
    let mut cells: BTreeMap<(&str, &str, usize), Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        cells.entry((&r.method, &r.budget, r.run)).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((method, budget, run), members) in cells {
        for (name, pick) in METRICS {
            let values: Vec<f64> = members.iter().filter_map(|r| pick(r)).collect();
            if values.len() == members.len() {
                out.push(consistency_row(method, budget, run, name, &values)?);
            }
        }
    }
    let mut hv_cells: BTreeMap<(&str, usize), Vec<&HvRow>> = BTreeMap::new();
    for h in hv {
        hv_cells.entry((&h.method, h.run)).or_default().push(h);
    }
    for ((method, run), members) in hv_cells {
        type Pick = fn(&HvRow) -> Option<f64>;
        for (name, pick) in [("hv_sp", (|h| h.hv_sp) as Pick), ("hv_eo", |h| h.hv_eo)] {
            let values: Vec<f64> = members.iter().filter_map(|h| pick(h)).collect();
            if !values.is_empty() && values.len() == members.len() {
                out.push(consistency_row(method, "all", run, name, &values)?);
            }
        }
    }
    Ok(out)
}
