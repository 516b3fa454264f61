use super::agent::Agent;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::replay::Transition;

/// Hard cap on evaluation episode length.
const MAX_EVAL_EPISODE_STEPS: u64 = 10_000;

/// One evaluation point of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord {
    pub step: u64,
    pub return_mean: f64,
    pub return_std: f64,
    /// Mean update loss since the previous record; `None` before learning starts.
    pub loss: Option<f64>,
    pub reg_value: Option<f64>,
    pub norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub returns: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of the episode returns.
    pub std: f64,
}

impl Agent {
    /// Greedy rollouts on `env`, one per configured evaluation episode.
    pub fn evaluate(&self, env: &mut dyn Environment) -> Result<EvalSummary> {
        let episodes = self.config.eval_episodes;
        let mut returns = Vec::with_capacity(episodes);
        for _ in 0..episodes {
            let mut obs = env.reset();
            let mut total = 0.0;
            for _ in 0..MAX_EVAL_EPISODE_STEPS {
                let r = env.step(self.greedy_action(&obs)?)?;
                total += r.reward;
                obs = r.next_observation;
                if r.terminal {
                    break;
                }
            }
            returns.push(total);
        }
        let n = returns.len() as f64;
        let mean = returns.iter().sum::<f64>() / n;
        let std = (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
        Ok(EvalSummary { returns, mean, std })
    }

    /// Runs the interaction loop for `total_steps` environment steps,
    /// evaluating on `eval_env` every `eval_every` steps.
    pub fn train(
        &mut self,
        env: &mut dyn Environment,
        eval_env: &mut dyn Environment,
        total_steps: u64,
        eval_every: u64,
    ) -> Result<Vec<TrainingRecord>> {
        self.train_with_hook(env, eval_env, total_steps, eval_every, |_, _| Ok(()))
    }

    /// As [`Agent::train`], calling `hook(agent, steps_done)` after every
    /// environment step.
    pub fn train_with_hook(
        &mut self,
        env: &mut dyn Environment,
        eval_env: &mut dyn Environment,
        total_steps: u64,
        eval_every: u64,
        mut hook: impl FnMut(&Agent, u64) -> Result<()>,
    ) -> Result<Vec<TrainingRecord>> {
        if eval_every == 0 {
            return Err(Error::Config("eval_every must be positive".into()));
        }
        if env.observation_len() != self.observation_len() || env.num_actions() != self.num_actions() {
            return Err(Error::Config(
                "environment does not match the agent's input/output sizes".into(),
            ));
        }
        let mut records = Vec::new();
        let mut loss_sum = 0.0;
        let mut loss_count = 0u64;
        let mut obs = env.reset();

        for step in 0..total_steps {
            let epsilon = self.config.epsilon_at(step, total_steps);
            let action = self.select_action(&obs, epsilon)?;
            let r = env.step(action)?;
            self.observe(Transition {
                s: std::mem::take(&mut obs),
                a: action,
                r: r.reward,
                s_next: r.next_observation.clone(),
                done: r.terminal,
            });
            obs = if r.terminal { env.reset() } else { r.next_observation };

            if step >= self.config.exploration_steps && self.buffer.len() >= self.config.batch_size {
                let stats = self.learn_step()?;
                loss_sum += stats.loss;
                loss_count += 1;
            }

            let done = step + 1;
            if done % eval_every == 0 {
                let eval = self.evaluate(eval_env)?;
                records.push(TrainingRecord {
                    step: done,
                    return_mean: eval.mean,
                    return_std: eval.std,
                    loss: (loss_count > 0).then(|| loss_sum / loss_count as f64),
                    reg_value: self.regularizer_value()?,
                    norms: self.norms(),
                });
                loss_sum = 0.0;
                loss_count = 0;
            }
            hook(self, done)?;
        }
        Ok(records)
    }
}
