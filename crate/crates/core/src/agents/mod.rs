//! DQN-family learners: DQN, Double DQN, EnsembleDQN and MaxminDQN, with the
//! norm-inequality regularizer wired into the two ensemble methods.

mod agent;
mod config;
mod train;

pub use agent::{argmax, q_ens, q_min, Agent, Member, UpdateStats};
pub use config::{AgentConfig, Algorithm, NormForm, RegularizerChoice};
pub use train::{EvalSummary, TrainingRecord};
