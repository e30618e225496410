//! Minimal differentiable dense network with explicit gradients.

pub mod checkpoint;
mod network;
mod optim;
mod tensor;

pub use network::{
    normalize_feature, softmax, Activation, Dense, DenseGrad, Feature, ForwardOutput, Gradients, ModelSnapshot,
    Network, ParamKind, Trace,
};
pub use optim::OptimizerState;
pub use tensor::{dot, l2_norm, squared_distance, Tensor2};
