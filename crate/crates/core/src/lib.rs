//! Diversity-regularized ensemble Q-learning.
//!
//! The crate is organised bottom-up:
//!
//! - [`autodiff`]: dense f64 tensors, a reverse-mode tape and optimizers.
//! - [`nn`]: fully connected ReLU networks built on the tape.
//! - [`env`]: small deterministic MDPs and the sine regression dataset.
//! - [`replay`]: uniform experience replay.
//! - [`regularizers`]: inequality measures over per-member parameter norms.
//! - [`agents`]: DQN, Double DQN, EnsembleDQN and MaxminDQN learners.
//! - [`similarity`]: HSIC and linear CKA over captured activations.
//! - [`stats`]: z-score pooling and Welch's t-test.

pub mod agents;
pub mod autodiff;
pub mod env;
pub mod error;
pub mod nn;
pub mod regularizers;
pub mod replay;
pub mod rng;
pub mod similarity;
pub mod stats;

pub use error::{Error, Result};
