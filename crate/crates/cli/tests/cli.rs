use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fairtrans::data::{load_csv, ToyClassification};
use fairtrans::experiment::{evaluate_baseline, upstream_config, EvalConfig};
use fairtrans::metrics::{aggregate, hypervolume_2d, scale_fairness};
use fairtrans::preprocess::{PreprocessorConfig, TrainedPreprocessor};
use serde_json::{json, Value};
use tempfile::TempDir;

const ZOO: [&str; 2] = ["logistic_regression", "knn"];

fn base_config(n_train: usize, n_test: usize, epochs: usize) -> Value {
    json!({
        "data": {"source": "toy_classification", "n_train": n_train, "n_test": n_test, "seed": 3},
        "preprocessor": {
            "delta_x": 0.3, "epochs": epochs, "batch_size": 100,
            "hidden": [32, 32], "critic_hidden": [32, 32],
            "lr_h": 3e-3, "lr_v": 3e-3, "lr_g": 3e-3
        },
        "evaluation": {"zoo": ZOO, "hgr_steps": 0},
        "seed": 7
    })
}

fn write_config(dir: &Path, cfg: &Value) -> String {
    let p = dir.join("config.json");
    fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

fn fairtrans(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairtrans"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) {
    let o = fairtrans(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn csv_rows(p: &Path) -> Vec<std::collections::HashMap<String, String>> {
    csv::Reader::from_path(p)
        .unwrap()
        .deserialize()
        .map(|r| r.unwrap())
        .collect()
}

fn num(s: &str) -> Option<f64> {
    (!s.is_empty()).then(|| s.parse().unwrap())
}

#[test]
fn train_writes_a_loadable_bundle_and_transform_round_trips() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &base_config(300, 100, 1));
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();
    ok(&["train", "--config", &cfg, "--out", out_s]);
    let pp = TrainedPreprocessor::load(out.join("bundle")).unwrap();
    assert_eq!(pp.traces().len(), 1);
    ok(&["transform", "--config", &cfg, "--out", out_s]);
    let t = out.join("transformed");
    let (train, _) = ToyClassification::default().generate_split(300, 100, 3).unwrap();
    let loaded = load_csv(t.join("train.csv"), t.join("schema.json")).unwrap();
    assert_eq!(loaded.len(), 300);
    assert_eq!(loaded.y, train.y);
    assert_eq!(loaded.a, train.a);
    let direct = pp.transform(&train).unwrap();
    let x3 = train.schema.covariate_blocks()[2].clone();
    assert_eq!(
        loaded.x.columns(x3.start, x3.start + x3.width),
        direct.x.columns(x3.start, x3.start + x3.width)
    );
    let meta = read_json(&t.join("train.csv.meta.json"));
    assert_eq!(meta["stamp"]["command"], "transform");
    assert_eq!(meta["config"]["seed"], 7);
}

#[test]
fn invalid_configs_fail_and_name_the_field() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &base_config(300, 100, 1));
    for (flag, field) in [
        ("preprocessor.delta_x=-0.1", "delta_x"),
        ("sweep.lambda_f=[]", "sweep.lambda_f"),
        ("preprocessor.epoch=3", "epoch"),
        ("runs=0", "runs"),
    ] {
        let o = fairtrans(&["train", "--config", &cfg, "--override", flag]);
        assert!(!o.status.success(), "{flag}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(field), "{flag}: {err}");
    }
    assert!(!fairtrans(&["train", "--config", "/nonexistent/config.json"])
        .status
        .success());
}

#[test]
fn same_seed_gives_byte_identical_traces() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &base_config(300, 100, 2));
    let dirs: Vec<String> = ["a", "b", "c"]
        .iter()
        .map(|d| tmp.path().join(d).to_string_lossy().into_owned())
        .collect();
    ok(&["train", "--config", &cfg, "--out", &dirs[0]]);
    ok(&["train", "--config", &cfg, "--out", &dirs[1]]);
    ok(&["train", "--config", &cfg, "--out", &dirs[2], "--seed", "8"]);
    let traces = |d: &str| {
        let mut doc = read_json(&Path::new(d).join("traces.json"));
        doc["config"]["out"] = Value::Null;
        (serde_json::to_string(&doc["traces"]).unwrap(), doc)
    };
    let bytes = |d: &str, f: &str| fs::read(Path::new(d).join(f)).unwrap();
    assert_eq!(traces(&dirs[0]), traces(&dirs[1]));
    assert_eq!(bytes(&dirs[0], "bundle/g_x.json"), bytes(&dirs[1], "bundle/g_x.json"));
    assert_eq!(
        bytes(&dirs[0], "bundle/bundle.json"),
        bytes(&dirs[1], "bundle/bundle.json")
    );
    assert_ne!(traces(&dirs[0]).0, traces(&dirs[2]).0);
    // Rerunning into the same directory reproduces the file exactly.
    let before = bytes(&dirs[0], "traces.json");
    ok(&["train", "--config", &cfg, "--out", &dirs[0]]);
    assert_eq!(before, bytes(&dirs[0], "traces.json"));
}

const REPORT_KEYS: [&str; 12] = [
    "model",
    "task",
    "n",
    "loss",
    "group_gap",
    "hgr_hat",
    "auc",
    "threshold",
    "sp",
    "eo",
    "ks_sp",
    "ks_eo",
];

#[test]
fn baseline_evaluation_matches_the_library_and_has_the_documented_schema() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &base_config(400, 200, 3));
    let out = tmp.path().join("out");
    ok(&["evaluate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let doc = read_json(&out.join("reports/evaluate_baseline.json"));
    assert_eq!(doc["stamp"]["tool"], "fairtrans");
    assert_eq!(doc["stamp"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["method"], "baseline");
    assert_eq!(doc["config"]["evaluation"]["zoo"], json!(ZOO));
    let models = doc["runs"][0]["models"].as_array().unwrap();
    assert_eq!(models.len(), ZOO.len() + 1);
    for m in models {
        let keys: Vec<&String> = m["report"].as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), REPORT_KEYS.len());
        assert!(REPORT_KEYS.iter().all(|k| m["report"].get(*k).is_some()), "{keys:?}");
        assert!(m["fit_loss"].is_f64());
    }

    let (train, test) = ToyClassification::default().generate_split(400, 200, 3).unwrap();
    let pre = PreprocessorConfig {
        epochs: 3,
        batch_size: 100,
        hidden: vec![32, 32],
        lr_h: 3e-3,
        seed: 7,
        ..PreprocessorConfig::default()
    };
    let eval = EvalConfig {
        zoo: serde_json::from_value(json!(ZOO)).unwrap(),
        hgr_steps: 0,
        seed: 7,
        ..EvalConfig::default()
    };
    let lib = evaluate_baseline(&train, &test, &upstream_config(&pre, train.task()), &eval).unwrap();
    for (cli, lib) in models.iter().zip(lib.reports()) {
        assert_eq!(cli["report"], serde_json::to_value(lib).unwrap());
    }
}

#[test]
fn aggregation_over_five_runs_is_mean_plus_minus_two_standard_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &base_config(200, 100, 2));
    let out = tmp.path().join("out");
    ok(&[
        "evaluate",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--runs",
        "5",
    ]);
    let doc = read_json(&out.join("reports/evaluate_baseline.json"));
    let runs = doc["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 5);
    let aggs = doc["aggregate"].as_array().unwrap();
    assert!(!aggs.is_empty());
    for a in aggs {
        let (model, metric) = (a["model"].as_str().unwrap(), a["metric"].as_str().unwrap());
        let values: Vec<f64> = runs
            .iter()
            .map(|r| {
                let m = r["models"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .find(|m| m["report"]["model"] == model)
                    .unwrap();
                if metric == "fit_loss" {
                    m["fit_loss"].as_f64()
                } else {
                    m["report"][metric].as_f64()
                }
                .unwrap()
            })
            .collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let se = sd / n.sqrt();
        for (key, want) in [
            ("mean", mean),
            ("std", sd),
            ("se", se),
            ("lower", mean - 2.0 * se),
            ("upper", mean + 2.0 * se),
        ] {
            let got = a[key].as_f64().unwrap();
            assert!(
                (got - want).abs() <= 1e-12 * (1.0 + want.abs()),
                "{model} {metric} {key}: {got} vs {want}"
            );
        }
        assert_eq!(a["n"], 5);
        assert_eq!(aggregate(&values).unwrap().mean, a["mean"].as_f64().unwrap());
    }
}

#[test]
fn sweep_outputs_rows_fronts_and_fairness_direction() {
    let tmp = TempDir::new().unwrap();
    let mut c = base_config(1500, 600, 25);
    c["sweep"] = json!({"lambda_f": [0.0, 5.0, 20.0]});
    c["runs"] = json!(2);
    let cfg = write_config(tmp.path(), &c);
    let out = tmp.path().join("out");
    ok(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);

    let rows = csv_rows(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 3 * 2 * (ZOO.len() + 1));
    let header = csv::Reader::from_path(out.join("sweep.csv"))
        .unwrap()
        .headers()
        .unwrap()
        .clone();
    let cols: Vec<&str> = header.iter().take(10).collect();
    assert_eq!(
        cols,
        ["method", "budget", "run", "model", "auc", "sp", "eo", "ks_sp", "ks_eo", "hv_group"]
    );
    assert_eq!(fs::read_dir(out.join("reports")).unwrap().count(), 3 * 2);

    // Hypervolumes recomputed from the CSV rows with sweep-wide scaling.
    let sp: Vec<f64> = rows.iter().map(|r| num(&r["sp"]).unwrap()).collect();
    let scaled = scale_fairness(&sp);
    let hv = csv_rows(&out.join("hv.csv"));
    assert_eq!(hv.len(), 2 * (ZOO.len() + 1));
    for h in &hv {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .zip(&scaled)
            .filter(|(r, _)| r["hv_group"] == h["hv_group"])
            .map(|(r, s)| (1.0 - num(&r["auc"]).unwrap(), *s))
            .collect();
        assert_eq!(pts.len(), 3);
        let want = hypervolume_2d(&pts, (1.0, 1.0)).unwrap();
        assert!((num(&h["hv_sp"]).unwrap() - want).abs() < 1e-12, "{h:?}");
    }

    // Strong budget lowers upstream statistical parity.
    let upstream_sp = |lf: &str| -> f64 {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r["model"] == "upstream" && r["budget"].ends_with(&format!("lf={lf}")))
            .map(|r| num(&r["sp"]).unwrap())
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(
        upstream_sp("20") < upstream_sp("0"),
        "{} vs {}",
        upstream_sp("20"),
        upstream_sp("0")
    );

    let cons = csv_rows(&out.join("consistency.csv"));
    assert!(cons.iter().all(|r| r["popoviciu_holds"] == "true"));
    assert!(cons.iter().any(|r| r["metric"] == "hv_sp" && r["budget"] == "all"));
    let meta = read_json(&out.join("sweep.csv.meta.json"));
    assert_eq!(meta["config"]["runs"], 2);

    let before = fs::read(out.join("hv.csv")).unwrap();
    ok(&["report", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(before, fs::read(out.join("hv.csv")).unwrap());
}
