//! Minimal dense-network engine: matrices, feed-forward nets with reverse-mode
//! gradients, Adam, and Gumbel-softmax heads.

mod adam;
mod checkpoint;
mod dense;
mod gumbel;
mod matrix;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{LayerCheckpoint, NetCheckpoint};
pub use dense::{sigmoid, softmax_in_place, Activation, DenseNet, Gradients, Layer, LayerGrad};
pub use gumbel::{gumbel_softmax, gumbel_softmax_backward, one_hot_rows, GumbelSample};
pub use matrix::Matrix;
