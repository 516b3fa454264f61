//! Reverse-mode automatic differentiation over dense f64 tensors.
//!
//! Values live in [`Tensor`]s. A [`Tape`] records operations on tensors it
//! owns and replays them backwards to produce [`Gradients`]. The forward
//! kernels in [`kernels`] are shared with the tape-free inference path, so
//! both produce bit-identical values.

pub mod kernels;
mod optim;
mod tape;
mod tensor;

pub use optim::{clip_grad_norm, Adam, AdamConfig, Optimizer, OptimizerKind, Sgd};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
