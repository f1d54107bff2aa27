//! Constrained min-max bilevel pre-processing: converters, trainer and the
//! transform API.
//!
//! A trained bundle on disk is a directory holding
//!
//! * `bundle.json`: format tag, version, config echo, training schema, traces
//! * `g_x.json`, `h_up.json`, `critic.json`: network checkpoints
//! * `g_y.json`: only when the outcome converter was trained (`delta_y > 0`)

mod config;
mod constraint;
mod converter;
mod loss;
mod trainer;

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use config::{Budget, FairnessNotion, LossKind, PreprocessorConfig};
pub use constraint::{constraint_loss, ConstraintSpec, DistanceKind};
pub use converter::Converter;
pub use loss::{score_loss, upstream_loss, SupervisedConfig, SupervisedModel, PROB_CLIP};
pub use trainer::{multiplier_step, train, DiagnosticSnapshot, EpochTrace};

use crate::data::{Dataset, Schema, Task};
use crate::error::{Error, Result};
use crate::hgr::DualCritic;
use crate::nn::{AdamConfig, DenseNet, Matrix};
use loss::scores_of;
use trainer::outcome_block;

const BUNDLE_FORMAT: &str = "fairtrans.bundle";
const BUNDLE_VERSION: u32 = 1;
const COVARIATE_STREAM: u64 = 1;
const OUTCOME_STREAM: u64 = 2;

/// Fitted converters, upstream model and critic, plus training traces.
#[derive(Debug, Clone)]
pub struct TrainedPreprocessor {
    config: PreprocessorConfig,
    schema: Schema,
    g_x: Converter,
    g_y: Option<Converter>,
    h_up: DenseNet,
    critic: DualCritic,
    traces: Vec<EpochTrace>,
}

#[derive(Serialize, Deserialize)]
struct BundleDoc {
    format: String,
    version: u32,
    crate_version: String,
    config: PreprocessorConfig,
    schema: Schema,
    has_outcome_converter: bool,
    critic_batch_size: usize,
    traces: Vec<EpochTrace>,
}

impl TrainedPreprocessor {
    pub(crate) fn from_parts(
        config: PreprocessorConfig,
        schema: Schema,
        g_x: Converter,
        g_y: Option<Converter>,
        h_up: DenseNet,
        critic: DualCritic,
        traces: Vec<EpochTrace>,
    ) -> Result<Self> {
        if h_up.input_dim() != schema.x_width() {
            return Err(Error::shape("upstream model must consume X̃ only"));
        }
        if g_x.net().input_dim() != schema.x_width() + schema.a_width() {
            return Err(Error::shape("covariate converter must consume (X, A) only"));
        }
        Ok(Self {
            config,
            schema,
            g_x,
            g_y,
            h_up,
            critic,
            traces,
        })
    }

    pub fn config(&self) -> &PreprocessorConfig {
        &self.config
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn task(&self) -> Task {
        self.schema.task()
    }

    pub fn covariate_converter(&self) -> &Converter {
        &self.g_x
    }

    pub fn outcome_converter(&self) -> Option<&Converter> {
        self.g_y.as_ref()
    }

    pub fn upstream(&self) -> &DenseNet {
        &self.h_up
    }

    pub fn critic(&self) -> &DualCritic {
        &self.critic
    }

    pub fn traces(&self) -> &[EpochTrace] {
        &self.traces
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(stream);
        rng
    }

    fn check_widths(&self, x: &Matrix, a: &Matrix) -> Result<()> {
        if x.cols() != self.schema.x_width() || a.cols() != self.schema.a_width() || x.rows() != a.rows() {
            return Err(Error::Input(format!(
                "expected x with {} and a with {} columns on aligned rows, got {:?} and {:?}",
                self.schema.x_width(),
                self.schema.a_width(),
                x.shape(),
                a.shape()
            )));
        }
        Ok(())
    }

    /// `X̃ = G*_X(X, A)`. Categorical blocks are one-hot; calls with equal
    /// inputs return equal outputs.
    pub fn transform_covariates(&self, x: &Matrix, a: &Matrix) -> Result<Matrix> {
        self.check_widths(x, a)?;
        let input = Matrix::hconcat(&[x, a])?;
        self.g_x.apply(&input, x, &mut self.rng(COVARIATE_STREAM))
    }

    /// `Ỹ = G*_Y(X, A, Y)`, or `y` unchanged when no outcome converter was trained.
    pub fn transform_outcome(&self, x: &Matrix, a: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
        self.check_widths(x, a)?;
        if y.len() != x.rows() {
            return Err(Error::Input("outcome length differs from covariate rows".into()));
        }
        let Some(g_y) = &self.g_y else {
            return Ok(y.to_vec());
        };
        let y_col = Matrix::column_vector(y);
        let input = Matrix::hconcat(&[x, a, &y_col])?;
        let anchor = loss::target_matrix(self.task(), y);
        let out = g_y.apply(&input, &anchor, &mut self.rng(OUTCOME_STREAM))?;
        Ok(match self.task() {
            Task::Classification => out.column(1),
            Task::Regression => out.column(0),
        })
    }

    /// Transformed dataset `D̃ = (X̃, A, Ỹ)`.
    pub fn transform(&self, d: &Dataset) -> Result<Dataset> {
        if !self.schema.same_layout(&d.schema) {
            return Err(Error::Input("dataset schema differs from the training schema".into()));
        }
        let x = self.transform_covariates(&d.x, &d.a)?;
        let y = self.transform_outcome(&d.x, &d.a, &d.y)?;
        d.with_transformed(x, y)
    }

    /// Raw upstream outputs `h̃*(X̃)` (class probabilities or the regression value).
    pub fn upstream_outputs(&self, x_tilde: &Matrix) -> Result<Matrix> {
        self.h_up.predict(x_tilde)
    }

    /// Scalar upstream score per row: `P(Ỹ = 1)` or the regression value.
    pub fn upstream_scores(&self, x_tilde: &Matrix) -> Result<Vec<f64>> {
        Ok(scores_of(self.task(), &self.h_up.predict(x_tilde)?))
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        self.g_x.net().save_json(dir.join("g_x.json"))?;
        let g_y_path = dir.join("g_y.json");
        match &self.g_y {
            Some(g) => g.net().save_json(&g_y_path)?,
            None if g_y_path.exists() => fs::remove_file(&g_y_path)?,
            None => {}
        }
        self.h_up.save_json(dir.join("h_up.json"))?;
        self.critic.net().save_json(dir.join("critic.json"))?;
        let doc = BundleDoc {
            format: BUNDLE_FORMAT.into(),
            version: BUNDLE_VERSION,
            crate_version: env!("CARGO_PKG_VERSION").into(),
            config: self.config.clone(),
            schema: self.schema.clone(),
            has_outcome_converter: self.g_y.is_some(),
            critic_batch_size: self.critic.batch_size(),
            traces: self.traces.clone(),
        };
        fs::write(dir.join("bundle.json"), serde_json::to_string_pretty(&doc)?)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let doc: BundleDoc = serde_json::from_str(&fs::read_to_string(dir.join("bundle.json"))?)?;
        if doc.format != BUNDLE_FORMAT || doc.version != BUNDLE_VERSION {
            return Err(Error::Input(format!(
                "unsupported bundle {} version {}",
                doc.format, doc.version
            )));
        }
        let t = doc.config.gumbel_temperature;
        let g_x = Converter::from_net(
            DenseNet::load_json(dir.join("g_x.json"))?,
            doc.schema.covariate_blocks(),
            t,
        )?;
        let g_y = if doc.has_outcome_converter {
            Some(Converter::from_net(
                DenseNet::load_json(dir.join("g_y.json"))?,
                vec![outcome_block(doc.schema.task())],
                t,
            )?)
        } else {
            None
        };
        let h_up = DenseNet::load_json(dir.join("h_up.json"))?;
        let critic = DualCritic::from_parts(
            DenseNet::load_json(dir.join("critic.json"))?,
            AdamConfig::with_lr(doc.config.lr_v),
            doc.critic_batch_size,
        )?;
        Self::from_parts(doc.config, doc.schema, g_x, g_y, h_up, critic, doc.traces)
    }
}
