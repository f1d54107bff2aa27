//! Upstream losses and the plain supervised baseline.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::LossKind;
use super::constraint::binary_one_hot;
use crate::data::Task;
use crate::error::{Error, Result};
use crate::nn::{Activation, AdamConfig, AdamState, DenseNet, Matrix};

/// Probabilities are clipped to `[PROB_CLIP, 1 − PROB_CLIP]` inside the log.
pub const PROB_CLIP: f64 = 1e-7;

pub(crate) struct LossEval {
    pub loss: f64,
    pub grad_pred: Matrix,
    pub grad_target: Matrix,
}

/// Mean loss over rows between a prediction and a target of the same shape,
/// with gradients for both.
pub(crate) fn loss_eval(kind: LossKind, pred: &Matrix, target: &Matrix) -> Result<LossEval> {
    if pred.shape() != target.shape() || pred.rows() == 0 {
        return Err(Error::shape(format!(
            "prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.rows() as f64;
    let mut grad_pred = Matrix::zeros(pred.rows(), pred.cols());
    let mut grad_target = Matrix::zeros(pred.rows(), pred.cols());
    let mut loss = 0.0;
    for (i, (&p, &t)) in pred.data().iter().zip(target.data()).enumerate() {
        match kind {
            LossKind::CrossEntropy => {
                let pc = p.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
                loss -= t * pc.ln();
                if pc == p {
                    grad_pred.data_mut()[i] = -t / pc / n;
                }
                grad_target.data_mut()[i] = -pc.ln() / n;
            }
            LossKind::SquaredError => {
                loss += (p - t).powi(2);
                grad_pred.data_mut()[i] = 2.0 * (p - t) / n;
                grad_target.data_mut()[i] = -2.0 * (p - t) / n;
            }
        }
    }
    Ok(LossEval {
        loss: loss / n,
        grad_pred,
        grad_target,
    })
}

/// Target matrix for an outcome vector: `[1 − y, y]` for classification,
/// the raw column for regression.
pub(crate) fn target_matrix(task: Task, y: &[f64]) -> Matrix {
    let col = Matrix::column_vector(y);
    match task {
        Task::Classification => binary_one_hot(&col),
        Task::Regression => col,
    }
}

pub(crate) fn output_spec(task: Task) -> (usize, Activation) {
    match task {
        Task::Classification => (2, Activation::Softmax),
        Task::Regression => (1, Activation::Identity),
    }
}

/// Scalar score per row of an upstream output: `P(Y = 1)` or the regression value.
pub(crate) fn scores_of(task: Task, out: &Matrix) -> Vec<f64> {
    match task {
        Task::Classification => out.column(1),
        Task::Regression => out.column(0),
    }
}

pub(crate) fn score_column(task: Task) -> usize {
    match task {
        Task::Classification => 1,
        Task::Regression => 0,
    }
}

/// Mean upstream loss of the net outputs `pred` against outcome `y`.
pub fn upstream_loss(kind: LossKind, task: Task, pred: &Matrix, y: &[f64]) -> Result<f64> {
    Ok(loss_eval(kind, pred, &target_matrix(task, y))?.loss)
}

/// Mean loss of scalar scores (`P(Y = 1)` or regression values) against `y`.
pub fn score_loss(kind: LossKind, task: Task, scores: &[f64], y: &[f64]) -> Result<f64> {
    let pred = match task {
        Task::Classification => binary_one_hot(&Matrix::column_vector(scores)),
        Task::Regression => Matrix::column_vector(scores),
    };
    upstream_loss(kind, task, &pred, y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisedConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub seed: u64,
    pub loss: LossKind,
}

/// Feed-forward model trained without any fairness term.
#[derive(Debug, Clone)]
pub struct SupervisedModel {
    net: DenseNet,
    task: Task,
}

impl SupervisedModel {
    pub fn fit(x: &Matrix, y: &[f64], task: Task, config: &SupervisedConfig) -> Result<Self> {
        if x.rows() != y.len() || y.len() < 2 {
            return Err(Error::Input("supervised fit needs ≥ 2 aligned rows".into()));
        }
        if config.epochs == 0 || config.batch_size == 0 {
            return Err(Error::param("epochs", "epochs and batch_size must be ≥ 1"));
        }
        let (out_dim, act) = output_spec(task);
        let mut dims = vec![x.cols()];
        dims.extend_from_slice(&config.hidden);
        dims.push(out_dim);
        let mut net = DenseNet::new(&dims, act, config.dropout, config.seed)?;
        let mut adam = AdamState::for_net(&net, AdamConfig::with_lr(config.learning_rate))?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let target = target_matrix(task, y);
        let mut order: Vec<usize> = (0..y.len()).collect();
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for idx in order.chunks(config.batch_size) {
                let out = net.forward(&x.select_rows(idx), true)?;
                let eval = loss_eval(config.loss, &out, &target.select_rows(idx))?;
                if !eval.loss.is_finite() {
                    return Err(Error::Input("supervised loss became non-finite".into()));
                }
                let grads = net.backward(&eval.grad_pred)?;
                adam.step_net(&mut net, &grads)?;
            }
        }
        net.clear_cache();
        Ok(Self { net, task })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn outputs(&self, x: &Matrix) -> Result<Matrix> {
        self.net.predict(x)
    }

    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(scores_of(self.task, &self.net.predict(x)?))
    }
}
