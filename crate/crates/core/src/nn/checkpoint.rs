//! Versioned JSON checkpoints for [`DenseNet`].
//!
//! Document layout (version 1):
//!
//! ```json
//! {
//!   "format": "fairtrans.dense_net",
//!   "version": 1,
//!   "dropout": 0.1,
//!   "seed": 42,
//!   "rng_word_pos": "1024",
//!   "layers": [
//!     { "input_dim": 3, "output_dim": 64, "activation": "relu",
//!       "weights": [/* input_dim * output_dim, row-major */], "bias": [/* output_dim */] }
//!   ]
//! }
//! ```
//!
//! Floats are written in shortest round-trip form, so parameters reload bit-exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Activation, DenseNet, Layer, Matrix};
use crate::error::{Error, Result};

pub const FORMAT: &str = "fairtrans.dense_net";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetCheckpoint {
    pub format: String,
    pub version: u32,
    pub dropout: f64,
    pub seed: u64,
    /// Position of the dropout RNG stream, decimal string (u128).
    pub rng_word_pos: String,
    pub layers: Vec<LayerCheckpoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCheckpoint {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseNet {
    pub fn to_checkpoint(&self) -> NetCheckpoint {
        NetCheckpoint {
            format: FORMAT.to_string(),
            version: VERSION,
            dropout: self.dropout(),
            seed: self.seed(),
            rng_word_pos: self.rng_word_pos().to_string(),
            layers: self
                .layers()
                .iter()
                .map(|l| LayerCheckpoint {
                    input_dim: l.input_dim(),
                    output_dim: l.output_dim(),
                    activation: l.activation,
                    weights: l.weights.data().to_vec(),
                    bias: l.bias.clone(),
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ck: &NetCheckpoint) -> Result<Self> {
        if ck.format != FORMAT {
            return Err(Error::Input(format!("not a network checkpoint: `{}`", ck.format)));
        }
        if ck.version != VERSION {
            return Err(Error::Input(format!("unsupported checkpoint version {}", ck.version)));
        }
        let layers = ck
            .layers
            .iter()
            .map(|l| {
                Ok(Layer {
                    weights: Matrix::new(l.input_dim, l.output_dim, l.weights.clone())?,
                    bias: l.bias.clone(),
                    activation: l.activation,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut net = DenseNet::from_layers(layers, ck.dropout, ck.seed)?;
        let pos = ck
            .rng_word_pos
            .parse::<u128>()
            .map_err(|e| Error::Input(format!("bad rng_word_pos: {e}")))?;
        net.set_rng_word_pos(pos);
        Ok(net)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(&self.to_checkpoint())?)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_checkpoint(&serde_json::from_str(&text)?)
    }
}
