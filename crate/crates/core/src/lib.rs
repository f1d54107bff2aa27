//! Fairness-aware pre-processing for tabular supervised learning.
//!
//! A converter `G_X` (and optionally `G_Y`) is trained jointly with an upstream
//! model `h` and a χ²-dual critic so that anything fitted on the transformed
//! data `(X̃, Ỹ)` depends less on the sensitive attribute `A`, while per-variable
//! distortion budgets are enforced by dual ascent on Lagrange multipliers.
//!
//! Modules:
//!
//! * [`nn`]: dense networks, reverse-mode gradients, Adam, Gumbel-softmax
//! * [`hgr`]: maximal-correlation oracles and the neural dual estimator
//! * [`data`]: schemas, CSV ingestion, splits and synthetic generators
//! * [`preprocess`]: the bilevel trainer and transform API
//! * [`downstream`]: model zoo fitted on transformed data
//! * [`metrics`]: AUC, parity/odds ratios, KS variants, hypervolume, diagnostics
//! * [`experiment`]: end-to-end evaluation of the upstream model and the zoo

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod data;
pub mod downstream;
pub mod error;
pub mod experiment;
pub mod hgr;
pub mod metrics;
pub mod nn;
pub mod preprocess;

pub use error::{Error, Result};
