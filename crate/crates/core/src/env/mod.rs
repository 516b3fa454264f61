//! Small deterministic MDPs with a uniform step interface.

mod catcher;
mod chain;
mod sine;

pub use catcher::{CatcherAction, CatcherConfig, CatcherLite};
pub use chain::{ChainConfig, ChainState, MaxbiasChain};
pub use sine::sine_dataset;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub observation: Vec<f64>,
    pub terminal: bool,
    pub step_index: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_observation: Vec<f64>,
    pub reward: f64,
    pub terminal: bool,
}

pub trait Environment: Send {
    fn observation_len(&self) -> usize;

    fn num_actions(&self) -> usize;

    /// Starts a new episode and returns its first observation.
    fn reset(&mut self) -> Vec<f64>;

    /// Advances one step. Stepping a terminal state is a contract error.
    fn step(&mut self, action: usize) -> Result<StepResult>;

    fn state(&self) -> EnvState;
}

/// Environment selection as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvConfig {
    CatcherLite(CatcherConfig),
    MaxbiasChain(ChainConfig),
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig::CatcherLite(CatcherConfig::default())
    }
}

impl EnvConfig {
    pub fn id(&self) -> &'static str {
        match self {
            EnvConfig::CatcherLite(_) => "catcher_lite",
            EnvConfig::MaxbiasChain(_) => "maxbias_chain",
        }
    }

    pub fn build(&self, seed: u64) -> Result<Box<dyn Environment>> {
        Ok(match self {
            EnvConfig::CatcherLite(c) => Box::new(CatcherLite::new(c.clone(), seed)?),
            EnvConfig::MaxbiasChain(c) => Box::new(MaxbiasChain::new(c.clone(), seed)?),
        })
    }
}
