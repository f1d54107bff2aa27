//! Converter networks `G_X` and `G_Y`.
//!
//! A shared dense trunk produces one output column per encoded target column;
//! the slice belonging to a variable acts as that variable's head. Continuous
//! heads are residual (`x̃ = x + head`), categorical heads add a fixed multiple
//! of the original one-hot to their logits and pass through a hard
//! Gumbel-softmax with straight-through gradients. At initialization the
//! converter is therefore close to the identity.

use rand::Rng;

use crate::data::{Kind, VariableBlock};
use crate::error::{Error, Result};
use crate::nn::{gumbel_softmax, gumbel_softmax_backward, Activation, DenseNet, Gradients, Matrix};

/// Logit bonus given to the original category.
pub(crate) const CATEGORY_ANCHOR: f64 = 4.0;
/// Output-layer weights are scaled by this factor at initialization.
const HEAD_INIT_SCALE: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct Converter {
    net: DenseNet,
    blocks: Vec<VariableBlock>,
    temperature: f64,
}

/// Relaxed samples of the categorical heads from one training pass.
pub(crate) struct ConverterPass {
    soft: Vec<Option<Matrix>>,
}

impl Converter {
    pub fn new(
        input_dim: usize,
        blocks: Vec<VariableBlock>,
        hidden: &[usize],
        dropout: f64,
        temperature: f64,
        seed: u64,
    ) -> Result<Self> {
        let width: usize = blocks.iter().map(|b| b.width).sum();
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(width);
        let mut net = DenseNet::new(&dims, Activation::Identity, dropout, seed)?;
        if let Some(last) = net.layers_mut().last_mut() {
            last.weights.scale(HEAD_INIT_SCALE);
        }
        Self::from_net(net, blocks, temperature)
    }

    pub fn from_net(net: DenseNet, blocks: Vec<VariableBlock>, temperature: f64) -> Result<Self> {
        let width: usize = blocks.iter().map(|b| b.width).sum();
        if net.output_dim() != width {
            return Err(Error::shape(format!(
                "converter emits {} columns for a {width}-column layout",
                net.output_dim()
            )));
        }
        if !(temperature > 0.0) {
            return Err(Error::param(
                "gumbel_temperature",
                format!("{temperature} must be positive"),
            ));
        }
        Ok(Self {
            net,
            blocks,
            temperature,
        })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn blocks(&self) -> &[VariableBlock] {
        &self.blocks
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    fn heads<R: Rng + ?Sized>(
        &self,
        raw: &Matrix,
        anchor: &Matrix,
        rng: &mut R,
    ) -> Result<(Matrix, Vec<Option<Matrix>>)> {
        if anchor.shape() != raw.shape() {
            return Err(Error::shape(format!(
                "anchor {:?} vs converter output {:?}",
                anchor.shape(),
                raw.shape()
            )));
        }
        let mut out = Matrix::zeros(raw.rows(), raw.cols());
        let mut soft = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let (lo, hi) = (b.start, b.start + b.width);
            let head = raw.columns(lo, hi);
            let orig = anchor.columns(lo, hi);
            match b.kind {
                Kind::Continuous => {
                    out.set_columns(lo, &head.zip_map(&orig, |h, o| h + o)?)?;
                    soft.push(None);
                }
                Kind::Categorical => {
                    let logits = head.zip_map(&orig, |h, o| h + CATEGORY_ANCHOR * o)?;
                    let sample = gumbel_softmax(&logits, self.temperature, true, rng)?;
                    out.set_columns(lo, &sample.output)?;
                    soft.push(Some(sample.soft));
                }
            }
        }
        Ok((out, soft))
    }

    /// Training-mode pass (dropout on); `anchor` is the encoded original.
    pub(crate) fn forward_train<R: Rng + ?Sized>(
        &mut self,
        input: &Matrix,
        anchor: &Matrix,
        rng: &mut R,
    ) -> Result<(Matrix, ConverterPass)> {
        let raw = self.net.forward(input, true)?;
        let (out, soft) = self.heads(&raw, anchor, rng)?;
        Ok((out, ConverterPass { soft }))
    }

    /// Parameter gradients given the gradient w.r.t. the converter output.
    pub(crate) fn backward(&self, pass: &ConverterPass, grad_out: &Matrix) -> Result<Gradients> {
        let mut g = grad_out.clone();
        for (b, soft) in self.blocks.iter().zip(&pass.soft) {
            if let Some(s) = soft {
                let (lo, hi) = (b.start, b.start + b.width);
                let dl = gumbel_softmax_backward(s, &grad_out.columns(lo, hi), self.temperature)?;
                g.set_columns(lo, &dl)?;
            }
        }
        self.net.backward(&g)
    }

    /// Inference-mode transform: dropout off, categorical heads hard.
    pub fn apply<R: Rng + ?Sized>(&self, input: &Matrix, anchor: &Matrix, rng: &mut R) -> Result<Matrix> {
        let raw = self.net.predict(input)?;
        Ok(self.heads(&raw, anchor, rng)?.0)
    }

    pub(crate) fn net_mut(&mut self) -> &mut DenseNet {
        &mut self.net
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn blocks() -> Vec<VariableBlock> {
        vec![
            VariableBlock {
                name: "c".into(),
                start: 0,
                width: 1,
                kind: Kind::Continuous,
            },
            VariableBlock {
                name: "k".into(),
                start: 1,
                width: 3,
                kind: Kind::Categorical,
            },
        ]
    }

    #[test]
    fn categorical_heads_emit_one_hot_and_stay_near_original() {
        let conv = Converter::new(5, blocks(), &[8], 0.0, 0.5, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 500;
        let mut anchor = Matrix::zeros(n, 4);
        for r in 0..n {
            anchor.set(r, 0, r as f64 / n as f64);
            anchor.set(r, 1 + r % 3, 1.0);
        }
        let input = Matrix::hconcat(&[&anchor, &Matrix::filled(n, 1, 1.0)]).unwrap();
        let out = conv.apply(&input, &anchor, &mut rng).unwrap();
        let mut kept = 0;
        for r in 0..n {
            let row = &out.row(r)[1..4];
            assert_eq!(row.iter().sum::<f64>(), 1.0);
            assert!(row.iter().all(|&v| v == 0.0 || v == 1.0));
            kept += usize::from(row[r % 3] == 1.0);
            assert!((out.get(r, 0) - anchor.get(r, 0)).abs() < 1.0);
        }
        assert!(kept as f64 / n as f64 > 0.9);
    }

    #[test]
    fn layout_mismatch_rejected() {
        let net = DenseNet::new(&[2, 3], Activation::Identity, 0.0, 0).unwrap();
        assert!(Converter::from_net(net, blocks(), 0.5).is_err());
    }
}
