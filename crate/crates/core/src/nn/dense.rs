//! Feed-forward dense networks with cached activations for reverse-mode gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
    Softmax,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: &mut Matrix) {
        match self {
            Activation::Identity => {}
            Activation::Relu => z.data_mut().iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Sigmoid => z.data_mut().iter_mut().for_each(|v| *v = sigmoid(*v)),
            Activation::Softmax => {
                for r in 0..z.rows() {
                    softmax_in_place(z.row_mut(r));
                }
            }
        }
    }

    /// Gradient w.r.t. the pre-activation given the activation output `a` and
    /// the upstream gradient `g`.
    fn backward(self, a: &Matrix, g: &Matrix) -> Matrix {
        match self {
            Activation::Identity => g.clone(),
            Activation::Relu => a
                .zip_map(g, |a, g| if a > 0.0 { g } else { 0.0 })
                .expect("cached shapes agree"),
            Activation::Sigmoid => a.zip_map(g, |a, g| g * a * (1.0 - a)).expect("cached shapes agree"),
            Activation::Softmax => {
                let mut out = Matrix::zeros(a.rows(), a.cols());
                for r in 0..a.rows() {
                    let (ar, gr) = (a.row(r), g.row(r));
                    let dot: f64 = ar.iter().zip(gr).map(|(a, g)| a * g).sum();
                    for (o, (a, g)) in out.row_mut(r).iter_mut().zip(ar.iter().zip(gr)) {
                        *o = a * (g - dot);
                    }
                }
                out
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// One affine map followed by an activation. `weights` is `input × output`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.cols()
    }
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Matrix,
    activated: Matrix,
    mask: Option<Matrix>,
}

/// Parameter gradients of a [`DenseNet`] plus the gradient w.r.t. its input.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
    pub input: Matrix,
}

#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Gradients {
    /// Flattened in the same order as [`DenseNet::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weights.data());
            out.extend_from_slice(&l.bias);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct DenseNet {
    layers: Vec<Layer>,
    dropout: f64,
    seed: u64,
    rng: ChaCha8Rng,
    cache: Option<Vec<LayerCache>>,
}

impl DenseNet {
    /// Builds a network with widths `dims = [input, hidden.., output]`, ReLU on
    /// hidden layers and `output` on the last, He-uniform initialized from `seed`.
    pub fn new(dims: &[usize], output: Activation, dropout: f64, seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::param("dims", "need at least input and output widths"));
        }
        if dims.contains(&0) {
            return Err(Error::param("dims", "layer widths must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let (fan_in, fan_out) = (dims[i], dims[i + 1]);
                let bound = (6.0 / fan_in as f64).sqrt();
                let w: Vec<f64> = (0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)).collect();
                Layer {
                    weights: Matrix::new(fan_in, fan_out, w).expect("sized above"),
                    bias: vec![0.0; fan_out],
                    activation: if i + 1 == n { output } else { Activation::Relu },
                }
            })
            .collect();
        Self::assemble(layers, dropout, seed, rng)
    }

    /// Wraps explicit layers; consecutive widths must chain.
    pub fn from_layers(layers: Vec<Layer>, dropout: f64, seed: u64) -> Result<Self> {
        Self::assemble(layers, dropout, seed, ChaCha8Rng::seed_from_u64(seed))
    }

    fn assemble(layers: Vec<Layer>, dropout: f64, seed: u64, rng: ChaCha8Rng) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::param("layers", "network needs at least one layer"));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::param("dropout", format!("{dropout} not in [0, 1)")));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.output_dim() {
                return Err(Error::shape(format!(
                    "layer {i}: bias length {} vs output width {}",
                    l.bias.len(),
                    l.output_dim()
                )));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::shape(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        Ok(Self {
            layers,
            dropout,
            seed,
            rng,
            cache: None,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn set_dropout(&mut self, p: f64) -> Result<()> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::param("dropout", format!("{p} not in [0, 1)")));
        }
        self.dropout = p;
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Forward pass that caches activations for [`DenseNet::backward`].
    /// Dropout is active on hidden layers only when `training` is set.
    pub fn forward(&mut self, input: &Matrix, training: bool) -> Result<Matrix> {
        self.check_input(input)?;
        let last = self.layers.len() - 1;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let activated = affine_activate(layer, &h)?;
            let mask = if training && i < last && self.dropout > 0.0 {
                let keep = 1.0 - self.dropout;
                let m: Vec<f64> = (0..activated.data().len())
                    .map(|_| {
                        if self.rng.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    })
                    .collect();
                Some(Matrix::new(activated.rows(), activated.cols(), m)?)
            } else {
                None
            };
            let next = match &mask {
                Some(m) => activated.zip_map(m, |a, m| a * m)?,
                None => activated.clone(),
            };
            caches.push(LayerCache {
                input: h,
                activated,
                mask,
            });
            h = next;
        }
        self.cache = Some(caches);
        Ok(h)
    }

    /// Inference pass: no dropout, no caching, a pure function of the weights.
    pub fn predict(&self, input: &Matrix) -> Result<Matrix> {
        self.check_input(input)?;
        let mut h = input.clone();
        for layer in &self.layers {
            h = affine_activate(layer, &h)?;
        }
        Ok(h)
    }

    /// Reverse pass from the gradient of a scalar loss w.r.t. the last output.
    pub fn backward(&self, grad_output: &Matrix) -> Result<Gradients> {
        let caches = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("backward called before a forward pass".into()))?;
        let out = &caches[caches.len() - 1].activated;
        if grad_output.shape() != out.shape() {
            return Err(Error::shape(format!(
                "output gradient {:?} vs forward output {:?}",
                grad_output.shape(),
                out.shape()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = grad_output.clone();
        for (layer, cache) in self.layers.iter().zip(caches).rev() {
            if let Some(mask) = &cache.mask {
                g = g.zip_map(mask, |g, m| g * m)?;
            }
            let dz = layer.activation.backward(&cache.activated, &g);
            let dw = cache.input.t_matmul(&dz)?;
            let db = dz.column_sums();
            g = dz.matmul_t(&layer.weights)?;
            grads.push(LayerGrad { weights: dw, bias: db });
        }
        grads.reverse();
        Ok(Gradients {
            layers: grads,
            input: g,
        })
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.data().len() + l.bias.len()).sum()
    }

    /// All parameters, layer by layer: weights (row-major) then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weights.data());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::shape(format!(
                "{} parameters supplied, network has {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.data().len();
            l.weights.data_mut().copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    fn check_input(&self, input: &Matrix) -> Result<()> {
        if input.cols() != self.input_dim() {
            return Err(Error::shape(format!(
                "network expects {} input columns, got {}",
                self.input_dim(),
                input.cols()
            )));
        }
        Ok(())
    }

    pub(crate) fn rng_word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub(crate) fn set_rng_word_pos(&mut self, pos: u128) {
        self.rng.set_word_pos(pos);
    }
}

fn affine_activate(layer: &Layer, h: &Matrix) -> Result<Matrix> {
    let mut z = h.matmul(&layer.weights)?;
    for r in 0..z.rows() {
        for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
            *v += b;
        }
    }
    layer.activation.apply(&mut z);
    Ok(z)
}
