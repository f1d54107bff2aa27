//! Distortion measures `Δ` between original and transformed variables.

use serde::{Deserialize, Serialize};

use crate::data::{Kind, Schema, Task, VariableBlock};
use crate::error::{Error, Result};
use crate::nn::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    /// `mean |x − x̃|` over all entries.
    MeanAbsoluteError,
    /// `mean_rows max(0, 1 − (s_true − max_{c ≠ true} s_c))` against a one-hot original.
    CategoricalHinge,
}

impl DistanceKind {
    pub fn for_kind(kind: Kind) -> Self {
        match kind {
            Kind::Continuous => DistanceKind::MeanAbsoluteError,
            Kind::Categorical => DistanceKind::CategoricalHinge,
        }
    }
}

/// Distance kind for every covariate variable and for the outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub covariates: Vec<(VariableBlock, DistanceKind)>,
    pub outcome: DistanceKind,
}

impl ConstraintSpec {
    pub fn from_schema(schema: &Schema) -> Self {
        Self {
            covariates: schema
                .covariate_blocks()
                .into_iter()
                .map(|b| {
                    let k = DistanceKind::for_kind(b.kind);
                    (b, k)
                })
                .collect(),
            outcome: match schema.task() {
                Task::Classification => DistanceKind::CategoricalHinge,
                Task::Regression => DistanceKind::MeanAbsoluteError,
            },
        }
    }

    /// Per-variable `Δ_X` between two encoded covariate matrices.
    pub fn covariate_losses(&self, original: &Matrix, transformed: &Matrix) -> Result<Vec<f64>> {
        self.covariates
            .iter()
            .map(|(b, k)| {
                constraint_loss(
                    *k,
                    &original.columns(b.start, b.start + b.width),
                    &transformed.columns(b.start, b.start + b.width),
                )
            })
            .collect()
    }

    /// `Δ_Y` between outcome vectors (0/1 labels for classification).
    pub fn outcome_loss(&self, original: &[f64], transformed: &[f64]) -> Result<f64> {
        let (o, t) = (Matrix::column_vector(original), Matrix::column_vector(transformed));
        match self.outcome {
            DistanceKind::MeanAbsoluteError => constraint_loss(self.outcome, &o, &t),
            DistanceKind::CategoricalHinge => constraint_loss(self.outcome, &binary_one_hot(&o), &binary_one_hot(&t)),
        }
    }
}

/// `[1 − y, y]` per row.
pub(crate) fn binary_one_hot(y: &Matrix) -> Matrix {
    let data = y.data().iter().flat_map(|&v| [1.0 - v, v]).collect();
    Matrix::new(y.rows(), 2, data).expect("two columns per row")
}

fn true_class(row: &[f64]) -> Option<usize> {
    let hot = row.iter().position(|&v| v == 1.0)?;
    let valid = row.iter().enumerate().all(|(i, &v)| i == hot || v == 0.0);
    valid.then_some(hot)
}

fn check(kind: DistanceKind, original: &Matrix, transformed: &Matrix) -> Result<()> {
    if original.shape() != transformed.shape() {
        return Err(Error::shape(format!(
            "original {:?} vs transformed {:?}",
            original.shape(),
            transformed.shape()
        )));
    }
    if original.rows() == 0 {
        return Err(Error::Input("constraint loss on zero rows".into()));
    }
    if kind == DistanceKind::CategoricalHinge {
        if original.cols() < 2 {
            return Err(Error::Input("categorical hinge needs at least 2 columns".into()));
        }
        if (0..original.rows()).any(|r| true_class(original.row(r)).is_none()) {
            return Err(Error::Input("categorical hinge needs a one-hot original".into()));
        }
    }
    Ok(())
}

pub fn constraint_loss(kind: DistanceKind, original: &Matrix, transformed: &Matrix) -> Result<f64> {
    Ok(constraint_loss_grad(kind, original, transformed)?.0)
}

/// Loss and its (sub)gradient with respect to `transformed`.
pub(crate) fn constraint_loss_grad(
    kind: DistanceKind,
    original: &Matrix,
    transformed: &Matrix,
) -> Result<(f64, Matrix)> {
    check(kind, original, transformed)?;
    let n = original.rows();
    match kind {
        DistanceKind::MeanAbsoluteError => {
            let count = (n * original.cols()) as f64;
            let diff = transformed.zip_map(original, |t, o| t - o)?;
            let loss = diff.data().iter().map(|d| d.abs()).sum::<f64>() / count;
            let grad = diff.map(|d| {
                if d > 0.0 {
                    1.0 / count
                } else if d < 0.0 {
                    -1.0 / count
                } else {
                    0.0
                }
            });
            Ok((loss, grad))
        }
        DistanceKind::CategoricalHinge => {
            let mut grad = Matrix::zeros(n, original.cols());
            let mut total = 0.0;
            for r in 0..n {
                let t = true_class(original.row(r)).expect("checked");
                let s = transformed.row(r);
                let (m, s_m) = s.iter().enumerate().filter(|&(c, _)| c != t).fold(
                    (usize::MAX, f64::NEG_INFINITY),
                    |best, (c, &v)| {
                        if v > best.1 {
                            (c, v)
                        } else {
                            best
                        }
                    },
                );
                let margin = 1.0 - (s[t] - s_m);
                if margin > 0.0 {
                    total += margin;
                    grad.set(r, t, -1.0 / n as f64);
                    grad.set(r, m, 1.0 / n as f64);
                }
            }
            Ok((total / n as f64, grad))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mae_examples() {
        let x = Matrix::column_vector(&[1.0, 2.0]);
        assert_eq!(constraint_loss(DistanceKind::MeanAbsoluteError, &x, &x).unwrap(), 0.0);
        let t = Matrix::column_vector(&[2.0, 4.0]);
        assert_eq!(constraint_loss(DistanceKind::MeanAbsoluteError, &x, &t).unwrap(), 1.5);
    }

    #[test]
    fn hinge_example() {
        let o = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let t = Matrix::from_rows(&[[0.9, 0.1]]).unwrap();
        let l = constraint_loss(DistanceKind::CategoricalHinge, &o, &t).unwrap();
        assert!((l - 0.2).abs() < 1e-12);
        assert_eq!(constraint_loss(DistanceKind::CategoricalHinge, &o, &o).unwrap(), 0.0);
    }

    #[test]
    fn hinge_rejects_non_one_hot_original() {
        let o = Matrix::from_rows(&[[0.5, 0.5]]).unwrap();
        assert!(constraint_loss(DistanceKind::CategoricalHinge, &o, &o).is_err());
        let a = Matrix::zeros(2, 1);
        assert!(constraint_loss(DistanceKind::MeanAbsoluteError, &a, &Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn label_flips_increase_outcome_hinge() {
        let y: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
        let spec = ConstraintSpec {
            covariates: Vec::new(),
            outcome: DistanceKind::CategoricalHinge,
        };
        let mut last = -1.0;
        for flips in [0, 5, 10, 30, 60, 100] {
            let t: Vec<f64> = y
                .iter()
                .enumerate()
                .map(|(i, &v)| if i < flips { 1.0 - v } else { v })
                .collect();
            let d = spec.outcome_loss(&y, &t).unwrap();
            assert!(d >= last);
            last = d;
        }
    }

    #[test]
    fn hinge_gradient_matches_finite_difference() {
        let o = Matrix::from_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        let t = Matrix::from_rows(&[[0.3, 0.5, 0.2], [0.2, 0.7, 0.1]]).unwrap();
        let (_, g) = constraint_loss_grad(DistanceKind::CategoricalHinge, &o, &t).unwrap();
        for i in 0..t.data().len() {
            let mut p = t.clone();
            p.data_mut()[i] += 1e-6;
            let mut m = t.clone();
            m.data_mut()[i] -= 1e-6;
            let fd = (constraint_loss(DistanceKind::CategoricalHinge, &o, &p).unwrap()
                - constraint_loss(DistanceKind::CategoricalHinge, &o, &m).unwrap())
                / 2e-6;
            assert!((fd - g.data()[i]).abs() < 1e-6);
        }
    }
}
