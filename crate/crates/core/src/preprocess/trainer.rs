//! The constrained min-max bilevel trainer.
//!
//! Per mini-batch:
//!
//! 1. `(X̄, Ȳ) = (G_X(X, A), G_Y(X, A, Y))`
//! 2. `t_prime` times: one descent step of `h` on `l(Ȳ, h(X̄))`, then one
//!    ascent step of the critic `V` on `R_V(h(X̄), A[, Y])`
//! 3. `λ_Xj += r_X·max(Δ_Xj − δ_Xj, 0)` per variable and
//!    `λ_Y += r_Y·max(Δ_Y − δ_Y, 0)`
//! 4. descend `G_X` on `l + λ_F·R_V + Σ_j λ_Xj·max(Δ_Xj − δ_Xj, 0)`
//! 5. descend `G_Y` on `l + λ_Y·max(Δ_Y − δ_Y, 0)`; skipped when `δ_Y = 0`,
//!    in which case `Ỹ = Y`

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{FairnessNotion, PreprocessorConfig};
use super::constraint::{constraint_loss_grad, ConstraintSpec};
use super::converter::Converter;
use super::loss::{loss_eval, output_spec, score_column, scores_of, target_matrix};
use super::TrainedPreprocessor;
use crate::data::{Dataset, Kind, Task, VariableBlock};
use crate::error::{Error, Result};
use crate::hgr::{independence_permutation, stratified_permutation, CriticConfig, DualCritic};
use crate::nn::{AdamConfig, AdamState, DenseNet, Matrix};

/// Per-epoch record of multipliers and measured constraints (batch means).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub epoch: usize,
    pub lambda_x: Vec<f64>,
    pub lambda_y: f64,
    pub delta_x: Vec<f64>,
    pub delta_y: f64,
    pub upstream_loss: f64,
    pub r_value: f64,
}

/// Trainer state at the moment a non-finite value appeared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSnapshot {
    pub epoch: usize,
    pub iteration: usize,
    pub stage: String,
    pub upstream_loss: f64,
    pub r_value: f64,
    pub lambda_x: Vec<f64>,
    pub lambda_y: f64,
    pub delta_x: Vec<f64>,
    pub delta_y: f64,
}

impl fmt::Display for DiagnosticSnapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at epoch {} iteration {} (loss {}, R_V {}, λ_X {:?}, λ_Y {}, Δ_X {:?}, Δ_Y {})",
            self.stage,
            self.epoch,
            self.iteration,
            self.upstream_loss,
            self.r_value,
            self.lambda_x,
            self.lambda_y,
            self.delta_x,
            self.delta_y
        )
    }
}

/// Output layout of `G_Y`.
pub(crate) fn outcome_block(task: Task) -> VariableBlock {
    let (width, kind) = match task {
        Task::Classification => (2, Kind::Categorical),
        Task::Regression => (1, Kind::Continuous),
    };
    VariableBlock {
        name: "outcome".into(),
        start: 0,
        width,
        kind,
    }
}

struct Trainer<'a> {
    config: &'a PreprocessorConfig,
    task: Task,
    spec: ConstraintSpec,
    budgets: Vec<f64>,
    conv_x: Converter,
    adam_x: AdamState,
    conv_y: Option<(Converter, AdamState)>,
    h: DenseNet,
    adam_h: AdamState,
    critic: DualCritic,
    lambda_x: Vec<f64>,
    lambda_y: f64,
    rng: ChaCha8Rng,
}

struct BatchStats {
    loss: f64,
    r_value: f64,
    delta_x: Vec<f64>,
    delta_y: f64,
}

/// Dual ascent on one multiplier: `λ + rate · max(Δ − δ, 0)`.
pub fn multiplier_step(lambda: f64, rate: f64, distance: f64, budget: f64) -> f64 {
    lambda + rate * (distance - budget).max(0.0)
}

impl Trainer<'_> {
    fn snapshot(&self, epoch: usize, iteration: usize, stage: &str, s: &BatchStats) -> Error {
        Error::NonFinite(Box::new(DiagnosticSnapshot {
            epoch,
            iteration,
            stage: stage.to_string(),
            upstream_loss: s.loss,
            r_value: s.r_value,
            lambda_x: self.lambda_x.clone(),
            lambda_y: self.lambda_y,
            delta_x: s.delta_x.clone(),
            delta_y: s.delta_y,
        }))
    }

    fn permutation(&mut self, n: usize, y: &[f64]) -> Vec<usize> {
        match self.config.fairness {
            FairnessNotion::Independence => independence_permutation(n, &mut self.rng),
            FairnessNotion::Separation => stratified_permutation(y, &mut self.rng).0,
        }
    }

    fn batch(&mut self, d: &Dataset, idx: &[usize], epoch: usize, iteration: usize) -> Result<BatchStats> {
        let cfg = self.config;
        let x = d.x.select_rows(idx);
        let a = d.a.select_rows(idx);
        let y: Vec<f64> = idx.iter().map(|&i| d.y[i]).collect();
        let y_target = target_matrix(self.task, &y);
        let outcome = (cfg.fairness == FairnessNotion::Separation).then_some(y.as_slice());
        let mut stats = BatchStats {
            loss: f64::NAN,
            r_value: f64::NAN,
            delta_x: Vec::new(),
            delta_y: 0.0,
        };

        // (1) converter outputs
        let gx_input = Matrix::hconcat(&[&x, &a])?;
        let (x_bar, pass_x) = self.conv_x.forward_train(&gx_input, &x, &mut self.rng)?;
        let mut pass_y = None;
        let target = match &mut self.conv_y {
            Some((conv, _)) => {
                let input = Matrix::hconcat(&[&x, &a, &Matrix::column_vector(&y)])?;
                let (out, pass) = conv.forward_train(&input, &y_target, &mut self.rng)?;
                pass_y = Some(pass);
                out
            }
            None => y_target.clone(),
        };

        // (2) inner upstream / critic steps
        let col = score_column(self.task);
        for _ in 0..cfg.t_prime {
            let out = self.h.forward(&x_bar, true)?;
            let eval = loss_eval(cfg.loss_for(self.task), &out, &target)?;
            stats.loss = eval.loss;
            if !eval.loss.is_finite() {
                return Err(self.snapshot(epoch, iteration, "upstream step", &stats));
            }
            let grads = self.h.backward(&eval.grad_pred)?;
            self.adam_h.step_net(&mut self.h, &grads)?;

            let scores = scores_of(self.task, &self.h.predict(&x_bar)?);
            let perm = self.permutation(idx.len(), &y);
            let r = self.critic.ascent_step(&scores, &a, outcome, &perm)?;
            if !r.is_finite() {
                stats.r_value = r;
                return Err(self.snapshot(epoch, iteration, "critic step", &stats));
            }
        }

        // (3) dual ascent
        let mut dx_grads = Vec::with_capacity(self.spec.covariates.len());
        for (j, (b, kind)) in self.spec.covariates.iter().enumerate() {
            let (lo, hi) = (b.start, b.start + b.width);
            let (dj, gj) = constraint_loss_grad(*kind, &x.columns(lo, hi), &x_bar.columns(lo, hi))?;
            stats.delta_x.push(dj);
            self.lambda_x[j] = multiplier_step(self.lambda_x[j], cfg.lr_x, dj, self.budgets[j]);
            dx_grads.push(gj);
        }
        let dy = match &self.conv_y {
            Some(_) => {
                let (dy, gy) = constraint_loss_grad(self.spec.outcome, &y_target, &target)?;
                self.lambda_y = multiplier_step(self.lambda_y, cfg.lr_y, dy, cfg.delta_y);
                Some((dy, gy))
            }
            None => None,
        };
        stats.delta_y = dy.as_ref().map_or(0.0, |d| d.0);
        if stats.delta_x.iter().any(|v| !v.is_finite()) || !stats.delta_y.is_finite() {
            return Err(self.snapshot(epoch, iteration, "constraint", &stats));
        }

        // (4) converter X step
        let out = self.h.forward(&x_bar, true)?;
        let eval = loss_eval(cfg.loss_for(self.task), &out, &target)?;
        stats.loss = eval.loss;
        let scores = scores_of(self.task, &out);
        let perm = self.permutation(idx.len(), &y);
        let (r, ds) = self.critic.penalty_with_score_grad(&scores, &a, outcome, &perm)?;
        stats.r_value = r;
        if !eval.loss.is_finite() || !r.is_finite() {
            return Err(self.snapshot(epoch, iteration, "converter step", &stats));
        }
        let mut grad_out = eval.grad_pred.clone();
        for (i, g) in ds.iter().enumerate() {
            let v = grad_out.get(i, col) + cfg.lambda_f * g;
            grad_out.set(i, col, v);
        }
        let mut grad_x = self.h.backward(&grad_out)?.input;
        for (j, ((b, _), gj)) in self.spec.covariates.iter().zip(&dx_grads).enumerate() {
            if stats.delta_x[j] > self.budgets[j] {
                let mut block = grad_x.columns(b.start, b.start + b.width);
                let mut scaled = gj.clone();
                scaled.scale(self.lambda_x[j]);
                block.add_assign(&scaled)?;
                grad_x.set_columns(b.start, &block)?;
            }
        }
        let grads = self.conv_x.backward(&pass_x, &grad_x)?;
        self.adam_x.step_net(self.conv_x.net_mut(), &grads)?;

        // (5) converter Y step
        if let (Some((conv, adam)), Some(pass), Some((dy, gy))) = (&mut self.conv_y, &pass_y, dy) {
            let mut grad_t = eval.grad_target;
            if dy > cfg.delta_y {
                let mut scaled = gy;
                scaled.scale(self.lambda_y);
                grad_t.add_assign(&scaled)?;
            }
            let grads = conv.backward(pass, &grad_t)?;
            adam.step_net(conv.net_mut(), &grads)?;
        }
        Ok(stats)
    }
}

/// Runs the bilevel optimization on `dataset`.
pub fn train(dataset: &Dataset, config: &PreprocessorConfig) -> Result<TrainedPreprocessor> {
    config.validate_for(&dataset.schema)?;
    dataset.validate()?;
    let schema = &dataset.schema;
    let task = schema.task();
    let spec = ConstraintSpec::from_schema(schema);
    let budgets = config.delta_x.resolve(spec.covariates.len())?;
    let mut seeds = ChaCha8Rng::seed_from_u64(config.seed);
    let mut next_seed = || rand::Rng::random::<u64>(&mut seeds);

    let (xw, aw) = (schema.x_width(), schema.a_width());
    let conv_x = Converter::new(
        xw + aw,
        schema.covariate_blocks(),
        &config.hidden,
        config.dropout,
        config.gumbel_temperature,
        next_seed(),
    )?;
    let adam_x = AdamState::for_net(conv_x.net(), AdamConfig::with_lr(config.lr_g))?;
    let conv_y = if config.delta_y > 0.0 {
        let conv = Converter::new(
            xw + aw + 1,
            vec![outcome_block(task)],
            &config.hidden,
            config.dropout,
            config.gumbel_temperature,
            next_seed(),
        )?;
        let adam = AdamState::for_net(conv.net(), AdamConfig::with_lr(config.lr_g))?;
        Some((conv, adam))
    } else {
        next_seed();
        None
    };
    let (out_dim, out_act) = output_spec(task);
    let mut dims = vec![xw];
    dims.extend_from_slice(&config.hidden);
    dims.push(out_dim);
    let h = DenseNet::new(&dims, out_act, config.dropout, next_seed())?;
    let adam_h = AdamState::for_net(&h, AdamConfig::with_lr(config.lr_h))?;
    let critic = DualCritic::new(
        aw,
        config.fairness == FairnessNotion::Separation,
        &CriticConfig {
            hidden: config.critic_hidden.clone(),
            learning_rate: config.lr_v,
            batch_size: config.batch_size,
            dropout: 0.0,
            seed: next_seed(),
        },
    )?;

    let mut t = Trainer {
        config,
        task,
        lambda_x: vec![0.0; spec.covariates.len()],
        spec,
        budgets,
        conv_x,
        adam_x,
        conv_y,
        h,
        adam_h,
        critic,
        lambda_y: 0.0,
        rng: ChaCha8Rng::seed_from_u64(next_seed()),
    };

    let n = dataset.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut traces = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut t.rng);
        let mut sum_dx = vec![0.0; t.lambda_x.len()];
        let (mut sum_dy, mut sum_loss, mut sum_r, mut batches) = (0.0, 0.0, 0.0, 0usize);
        for (iteration, idx) in order.chunks(config.batch_size).enumerate() {
            if idx.len() < 2 {
                continue;
            }
            let s = t.batch(dataset, idx, epoch, iteration)?;
            for (acc, v) in sum_dx.iter_mut().zip(&s.delta_x) {
                *acc += v;
            }
            sum_dy += s.delta_y;
            sum_loss += s.loss;
            sum_r += s.r_value;
            batches += 1;
        }
        let m = batches.max(1) as f64;
        traces.push(EpochTrace {
            epoch,
            lambda_x: t.lambda_x.clone(),
            lambda_y: t.lambda_y,
            delta_x: sum_dx.iter().map(|v| v / m).collect(),
            delta_y: sum_dy / m,
            upstream_loss: sum_loss / m,
            r_value: sum_r / m,
        });
        log::debug!(
            "epoch {epoch}: loss {:.4}, R_V {:.4}, Δ_X {:?}",
            sum_loss / m,
            sum_r / m,
            traces[epoch].delta_x
        );
    }

    let Trainer {
        mut conv_x,
        conv_y,
        mut h,
        critic,
        ..
    } = t;
    conv_x.net_mut().clear_cache();
    h.clear_cache();
    let conv_y = conv_y.map(|(mut c, _)| {
        c.net_mut().clear_cache();
        c
    });
    TrainedPreprocessor::from_parts(
        config.clone(),
        dataset.schema.clone(),
        conv_x,
        conv_y,
        h,
        critic,
        traces,
    )
}
