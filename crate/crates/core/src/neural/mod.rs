//! Dense tensors, a small reverse-mode tape, and the preference-conditioned
//! GGNN policy/value network.

mod checkpoint;
mod graph;
mod model;
mod optim;
mod params;
mod tensor;

pub use checkpoint::{Checkpoint, MAGIC as CHECKPOINT_MAGIC, VERSION as CHECKPOINT_VERSION};
pub use graph::{Graph, Var};
pub use model::{adjacency_tensor, ForwardVars, ModelConfig, PolicyValueNet, ACTION_CLASSES};
pub use optim::{clip_grad_norm, Optimizer, OptimizerKind};
pub use params::{Gradients, ParamId, ParamStore};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
