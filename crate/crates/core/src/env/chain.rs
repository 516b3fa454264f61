use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{EnvState, Environment, StepResult};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    /// Number of actions available in state B (and the action-space size).
    pub b_actions: usize,
    pub reward_mean: f64,
    pub reward_std: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            b_actions: 8,
            reward_mean: -0.1,
            reward_std: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainState {
    A,
    B,
    Terminal,
}

/// Two-state maximization-bias MDP.
///
/// From `A`, [`MaxbiasChain::LEFT`] moves to `B` with reward 0 and
/// [`MaxbiasChain::RIGHT`] terminates with reward 0. Every other action index
/// in `A` behaves as RIGHT, so the action space is uniform at `b_actions`.
/// From `B` every action terminates with a reward drawn from
/// `Normal(reward_mean, reward_std)`. With a negative mean the optimal
/// policy is RIGHT and the optimal value of `A` is 0.
///
/// Observations are one-hot over `(A, B, terminal)`.
#[derive(Debug, Clone)]
pub struct MaxbiasChain {
    config: ChainConfig,
    rng: ChaCha8Rng,
    reward: Normal<f64>,
    state: ChainState,
    step_index: u64,
}

impl MaxbiasChain {
    pub const LEFT: usize = 0;
    pub const RIGHT: usize = 1;

    pub fn new(config: ChainConfig, seed: u64) -> Result<Self> {
        if config.b_actions < 2 {
            return Err(Error::Config("chain needs at least 2 actions".into()));
        }
        let reward = Normal::new(config.reward_mean, config.reward_std)
            .map_err(|e| Error::Config(format!("chain reward distribution: {e}")))?;
        Ok(MaxbiasChain {
            config,
            rng: rng::stream(seed, &[rng::tag::ENV]),
            reward,
            state: ChainState::A,
            step_index: 0,
        })
    }

    pub fn current(&self) -> ChainState {
        self.state
    }

    pub fn encode(state: ChainState) -> Vec<f64> {
        let mut v = vec![0.0; 3];
        v[state as usize] = 1.0;
        v
    }

    /// Observation of the start state.
    pub fn start_observation() -> Vec<f64> {
        Self::encode(ChainState::A)
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }
}

impl Environment for MaxbiasChain {
    fn observation_len(&self) -> usize {
        3
    }

    fn num_actions(&self) -> usize {
        self.config.b_actions
    }

    fn reset(&mut self) -> Vec<f64> {
        self.state = ChainState::A;
        self.step_index = 0;
        Self::encode(self.state)
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        if action >= self.config.b_actions {
            return Err(Error::Contract(format!("chain action {action} out of range")));
        }
        let (next, reward) = match self.state {
            ChainState::Terminal => {
                return Err(Error::Contract("step on a terminal chain state".into()))
            }
            ChainState::A if action == Self::LEFT => (ChainState::B, 0.0),
            ChainState::A => (ChainState::Terminal, 0.0),
            ChainState::B => (ChainState::Terminal, self.reward.sample(&mut self.rng)),
        };
        self.state = next;
        self.step_index += 1;
        Ok(StepResult {
            next_observation: Self::encode(next),
            reward,
            terminal: next == ChainState::Terminal,
        })
    }

    fn state(&self) -> EnvState {
        EnvState {
            observation: Self::encode(self.state),
            terminal: self.state == ChainState::Terminal,
            step_index: self.step_index,
        }
    }
}
