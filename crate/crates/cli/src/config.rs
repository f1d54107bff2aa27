//! Experiment configuration: a single JSON document plus command-line
//! overrides.
//!
//! The top-level `seed` drives every run. Run `r` uses `seed + r` for the
//! trainer and the downstream models, and `data.seed + r` to draw (toy) or
//! split (CSV) the data. Nested `seed` fields are overwritten.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fairtrans::data::{
    load_csv, split, toy_regression_split, Dataset, ToyClassification, TOY_TEST_SIZE, TOY_TRAIN_SIZE,
};
use fairtrans::experiment::EvalConfig;
use fairtrans::preprocess::{Budget, PreprocessorConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

fn toy_train() -> usize {
    TOY_TRAIN_SIZE
}

fn toy_test() -> usize {
    TOY_TEST_SIZE
}

fn test_fraction() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    ToyClassification {
        #[serde(default = "toy_train")]
        n_train: usize,
        #[serde(default = "toy_test")]
        n_test: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Weak-signal variant of the classification toy.
    ToyClassificationHard {
        #[serde(default = "toy_train")]
        n_train: usize,
        #[serde(default = "toy_test")]
        n_test: usize,
        #[serde(default)]
        seed: u64,
    },
    ToyRegression {
        #[serde(default = "toy_train")]
        n_train: usize,
        #[serde(default = "toy_test")]
        n_test: usize,
        #[serde(default)]
        seed: u64,
    },
    /// CSV file plus schema; relative paths resolve against the config file.
    Csv {
        path: PathBuf,
        schema: PathBuf,
        #[serde(default = "test_fraction")]
        test_fraction: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec::ToyClassification {
            n_train: TOY_TRAIN_SIZE,
            n_test: TOY_TEST_SIZE,
            seed: 0,
        }
    }
}

impl DataSpec {
    /// Train and test split of run `run`.
    pub fn load(&self, run: usize) -> Result<(Dataset, Dataset)> {
        let r = run as u64;
        let pair = match self {
            DataSpec::ToyClassification { n_train, n_test, seed } => {
                ToyClassification::default().generate_split(*n_train, *n_test, seed + r)?
            }
            DataSpec::ToyClassificationHard { n_train, n_test, seed } => {
                ToyClassification::hard().generate_split(*n_train, *n_test, seed + r)?
            }
            DataSpec::ToyRegression { n_train, n_test, seed } => toy_regression_split(*n_train, *n_test, seed + r)?,
            DataSpec::Csv {
                path,
                schema,
                test_fraction,
                seed,
            } => {
                let d = load_csv(path, schema)?;
                split(&d, *test_fraction, seed + r)?
            }
        };
        Ok(pair)
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let DataSpec::Csv { path, schema, .. } = self {
            for p in [path, schema] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            DataSpec::ToyClassification { n_train, n_test, .. }
            | DataSpec::ToyClassificationHard { n_train, n_test, .. }
            | DataSpec::ToyRegression { n_train, n_test, .. } => {
                if *n_train < 10 || *n_test < 10 {
                    bail!("invalid `data.n_train`/`data.n_test`: need at least 10 rows each");
                }
            }
            DataSpec::Csv { test_fraction, .. } => {
                if !(*test_fraction > 0.0 && *test_fraction < 1.0) {
                    bail!("invalid `data.test_fraction`: {test_fraction} not in (0, 1)");
                }
            }
        }
        Ok(())
    }
}

/// Budget grid; the sweep visits the Cartesian product in the order
/// `delta_x`, `delta_y`, `lambda_f` (last varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub delta_x: Vec<Budget>,
    pub delta_y: Vec<f64>,
    pub lambda_f: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            delta_x: vec![Budget::Uniform(0.1)],
            delta_y: vec![0.0],
            lambda_f: vec![2.0, 5.0, 20.0],
        }
    }
}

/// One point of the budget grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetPoint {
    pub delta_x: Budget,
    pub delta_y: f64,
    pub lambda_f: f64,
}

impl BudgetPoint {
    pub fn label(&self) -> String {
        let dx = match &self.delta_x {
            Budget::Uniform(v) => format!("{v}"),
            Budget::PerVariable(v) => v.iter().map(|b| b.to_string()).collect::<Vec<_>>().join("/"),
        };
        format!("dx={dx};dy={};lf={}", self.delta_y, self.lambda_f)
    }

    pub fn apply(&self, base: &PreprocessorConfig) -> PreprocessorConfig {
        PreprocessorConfig {
            delta_x: self.delta_x.clone(),
            delta_y: self.delta_y,
            lambda_f: self.lambda_f,
            ..base.clone()
        }
    }
}

impl SweepSpec {
    pub fn points(&self) -> Vec<BudgetPoint> {
        let mut out = Vec::new();
        for dx in &self.delta_x {
            for &dy in &self.delta_y {
                for &lf in &self.lambda_f {
                    out.push(BudgetPoint {
                        delta_x: dx.clone(),
                        delta_y: dy,
                        lambda_f: lf,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSpec,
    pub preprocessor: PreprocessorConfig,
    pub evaluation: EvalConfig,
    pub sweep: SweepSpec,
    pub runs: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSpec::default(),
            preprocessor: PreprocessorConfig::default(),
            evaluation: EvalConfig::default(),
            sweep: SweepSpec::default(),
            runs: 1,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

/// Command-line adjustments applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub pairs: Vec<String>,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub out: Option<PathBuf>,
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets the dotted `key` inside `doc`; intermediate objects are created.
fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("invalid override key `{key}`");
    }
    let mut cur = doc;
    for (i, part) in parts.iter().enumerate() {
        let Value::Object(map) = cur else {
            bail!("override `{key}`: `{}` is not an object", parts[..i].join("."));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        cur = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("loop returns on the last part")
}

impl ExperimentConfig {
    /// Reads `path` (or the defaults), applies overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let (base, mut cfg): (PathBuf, ExperimentConfig) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                let cfg = serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?;
                (p.parent().map(Path::to_path_buf).unwrap_or_default(), cfg)
            }
            None => (PathBuf::new(), ExperimentConfig::default()),
        };
        if !overrides.pairs.is_empty() {
            let mut doc = serde_json::to_value(&cfg)?;
            for pair in &overrides.pairs {
                let Some((k, v)) = pair.split_once('=') else {
                    bail!("override `{pair}` is not of the form key=value");
                };
                set_path(&mut doc, k.trim(), parse_value(v.trim()))?;
            }
            cfg = serde_json::from_value(doc).context("applying overrides")?;
        }
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        if let Some(r) = overrides.runs {
            cfg.runs = r;
        }
        if let Some(o) = &overrides.out {
            cfg.out = o.clone();
        }
        cfg.data.resolve_paths(&base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            bail!("invalid `runs`: must be ≥ 1");
        }
        self.data.validate()?;
        self.preprocessor.validate().context("invalid `preprocessor`")?;
        self.evaluation
            .downstream
            .validate()
            .context("invalid `evaluation.downstream`")?;
        for (name, empty) in [
            ("sweep.delta_x", self.sweep.delta_x.is_empty()),
            ("sweep.delta_y", self.sweep.delta_y.is_empty()),
            ("sweep.lambda_f", self.sweep.lambda_f.is_empty()),
        ] {
            if empty {
                bail!("invalid `{name}`: list must be nonempty");
            }
        }
        for p in self.sweep.points() {
            p.apply(&self.preprocessor)
                .validate()
                .with_context(|| format!("invalid `sweep` point {}", p.label()))?;
        }
        Ok(())
    }

    /// Trainer configuration of run `run`.
    pub fn preprocessor_for(&self, run: usize) -> PreprocessorConfig {
        PreprocessorConfig {
            seed: self.run_seed(run),
            ..self.preprocessor.clone()
        }
    }

    pub fn evaluation_for(&self, run: usize) -> EvalConfig {
        EvalConfig {
            seed: self.run_seed(run),
            ..self.evaluation.clone()
        }
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        self.seed.wrapping_add(run as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with(pairs: &[&str]) -> Result<ExperimentConfig> {
        let o = Overrides {
            pairs: pairs.iter().map(|s| s.to_string()).collect(),
            ..Overrides::default()
        };
        ExperimentConfig::load(None, &o)
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let c = with(&[
            "preprocessor.epochs=3",
            "sweep.lambda_f=[1,2]",
            "data.n_train=50",
            "out=x",
        ])
        .unwrap();
        assert_eq!(c.preprocessor.epochs, 3);
        assert_eq!(c.sweep.lambda_f, vec![1.0, 2.0]);
        assert_eq!(c.out, PathBuf::from("x"));
        assert!(matches!(c.data, DataSpec::ToyClassification { n_train: 50, .. }));
    }

    #[test]
    fn errors_name_the_field() {
        let e = format!("{:#}", with(&["preprocessor.delta_x=-0.1"]).unwrap_err());
        assert!(e.contains("delta_x"), "{e}");
        let e = format!("{:#}", with(&["preprocessor.epoch=3"]).unwrap_err());
        assert!(e.contains("epoch"), "{e}");
        let e = format!("{:#}", with(&["sweep.lambda_f=[]"]).unwrap_err());
        assert!(e.contains("sweep.lambda_f"), "{e}");
        assert!(with(&["runs=0"]).is_err());
        assert!(with(&["noequals"]).is_err());
    }

    #[test]
    fn grid_order_and_labels() {
        let s = SweepSpec {
            delta_x: vec![Budget::Uniform(0.1), Budget::PerVariable(vec![0.1, 0.2])],
            delta_y: vec![0.0],
            lambda_f: vec![1.0, 5.0],
        };
        let labels: Vec<String> = s.points().iter().map(BudgetPoint::label).collect();
        assert_eq!(
            labels,
            [
                "dx=0.1;dy=0;lf=1",
                "dx=0.1;dy=0;lf=5",
                "dx=0.1/0.2;dy=0;lf=1",
                "dx=0.1/0.2;dy=0;lf=5"
            ]
        );
    }

    #[test]
    fn run_seeds_shift_every_component() {
        let c = with(&["seed=10"]).unwrap();
        assert_eq!(c.preprocessor_for(2).seed, 12);
        assert_eq!(c.evaluation_for(0).seed, 10);
    }

    #[test]
    fn shipped_configs_validate() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut n = 0;
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            let cfg = ExperimentConfig::load(Some(&path), &Overrides::default())
                .unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
            if let DataSpec::Csv { schema, .. } = &cfg.data {
                assert!(schema.exists(), "{} names a missing schema", path.display());
            }
            n += 1;
        }
        assert!(n >= 5);
    }
}
