//! Minimal feedforward network engine.

mod checkpoint;
pub mod gradcheck;
mod layer;
mod mlp;
mod ops;
mod sgd;

pub use checkpoint::{Checkpoint, LayerState, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use layer::{stack_output_width, HiddenStack, LayerSpec, BATCHNORM_EPS, BATCHNORM_MOMENTUM};
pub use mlp::{Gradients, LayerGrad, Mlp, Mode};
pub use ops::{cross_entropy, one_hot, softmax, softmax_cross_entropy, LOG_CLAMP};
pub use sgd::{Sgd, SgdConfig};
