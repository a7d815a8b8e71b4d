//! Minimal reverse-mode differentiation kernel and optimizer.

mod adam;
mod dropout;
mod gradcheck;
mod graph;
pub mod init;
mod rng;
pub mod serialize;
mod softmax;
mod tensor;

pub use adam::{adam_step, AdamState, DEFAULT_LEARNING_RATE};
pub use dropout::{dropout, dropout_mask};
pub use gradcheck::grad_check;
pub use graph::{Graph, Var};
pub use rng::RngStream;
pub use softmax::{log_softmax, softmax};
pub use tensor::{Gradients, ParamId, ParameterStore, Tensor};
