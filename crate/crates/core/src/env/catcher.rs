use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EnvState, Environment, StepResult};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CatcherConfig {
    /// Track width; the fruit also falls from row `width - 1` to row 0.
    pub width: usize,
    /// Fruits per episode.
    pub fruit_budget: u32,
    /// End the episode on the first missed fruit.
    pub end_on_miss: bool,
}

impl Default for CatcherConfig {
    fn default() -> Self {
        CatcherConfig {
            width: 10,
            fruit_budget: 10,
            end_on_miss: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatcherAction {
    Left = 0,
    Stay = 1,
    Right = 2,
}

/// Paddle-and-falling-fruit game on a `width × width` grid.
///
/// Each step the paddle moves (clamped at the walls), then the fruit drops
/// one row. When the fruit reaches row 0 it is caught (+1) if the paddle is
/// in its column, missed (−1) otherwise, and a new fruit spawns at the top
/// in a random column.
#[derive(Debug, Clone)]
pub struct CatcherLite {
    config: CatcherConfig,
    rng: ChaCha8Rng,
    paddle_x: usize,
    fruit_x: usize,
    fruit_y: usize,
    fruits_done: u32,
    terminal: bool,
    step_index: u64,
}

impl CatcherLite {
    pub fn new(config: CatcherConfig, seed: u64) -> Result<Self> {
        if config.width < 2 {
            return Err(Error::Config("catcher width must be at least 2".into()));
        }
        if config.fruit_budget == 0 {
            return Err(Error::Config("catcher fruit budget must be positive".into()));
        }
        let mut env = CatcherLite {
            rng: rng::stream(seed, &[rng::tag::ENV]),
            paddle_x: 0,
            fruit_x: 0,
            fruit_y: config.width - 1,
            fruits_done: 0,
            terminal: false,
            step_index: 0,
            config,
        };
        env.reset();
        Ok(env)
    }

    /// Places paddle and fruit directly, for tests and oracles.
    pub fn set_positions(&mut self, paddle_x: usize, fruit_x: usize, fruit_y: usize) {
        let top = self.config.width - 1;
        self.paddle_x = paddle_x.min(top);
        self.fruit_x = fruit_x.min(top);
        self.fruit_y = fruit_y.min(top);
    }

    pub fn paddle_x(&self) -> usize {
        self.paddle_x
    }

    pub fn fruit(&self) -> (usize, usize) {
        (self.fruit_x, self.fruit_y)
    }

    /// Maximum achievable return: one point per fruit.
    pub fn max_return(&self) -> f64 {
        self.config.fruit_budget as f64
    }

    fn observe(&self) -> Vec<f64> {
        let top = (self.config.width - 1) as f64;
        vec![
            self.paddle_x as f64 / top,
            self.fruit_x as f64 / top,
            self.fruit_y as f64 / top,
        ]
    }

    fn spawn_fruit(&mut self) {
        self.fruit_x = self.rng.random_range(0..self.config.width);
        self.fruit_y = self.config.width - 1;
    }

    /// Greedy oracle: move toward the fruit column.
    pub fn greedy_action(&self) -> usize {
        use std::cmp::Ordering::*;
        match self.paddle_x.cmp(&self.fruit_x) {
            Less => CatcherAction::Right as usize,
            Greater => CatcherAction::Left as usize,
            Equal => CatcherAction::Stay as usize,
        }
    }
}

impl Environment for CatcherLite {
    fn observation_len(&self) -> usize {
        3
    }

    fn num_actions(&self) -> usize {
        3
    }

    fn reset(&mut self) -> Vec<f64> {
        self.paddle_x = self.rng.random_range(0..self.config.width);
        self.spawn_fruit();
        self.fruits_done = 0;
        self.terminal = false;
        self.step_index = 0;
        self.observe()
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        if self.terminal {
            return Err(Error::Contract("step on a terminal catcher state".into()));
        }
        let top = self.config.width - 1;
        self.paddle_x = match action {
            0 => self.paddle_x.saturating_sub(1),
            1 => self.paddle_x,
            2 => (self.paddle_x + 1).min(top),
            _ => {
                return Err(Error::Contract(format!(
                    "catcher action {action} out of range"
                )))
            }
        };
        self.fruit_y -= 1;
        self.step_index += 1;

        let mut reward = 0.0;
        if self.fruit_y == 0 {
            let caught = self.paddle_x == self.fruit_x;
            reward = if caught { 1.0 } else { -1.0 };
            self.fruits_done += 1;
            if self.fruits_done >= self.config.fruit_budget || (!caught && self.config.end_on_miss) {
                self.terminal = true;
            } else {
                self.spawn_fruit();
            }
        }
        Ok(StepResult {
            next_observation: self.observe(),
            reward,
            terminal: self.terminal,
        })
    }

    fn state(&self) -> EnvState {
        EnvState {
            observation: self.observe(),
            terminal: self.terminal,
            step_index: self.step_index,
        }
    }
}
