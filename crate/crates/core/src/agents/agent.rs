use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{AgentConfig, Algorithm, NormForm};
use crate::autodiff::{clip_grad_norm, Adam, AdamConfig, Optimizer, OptimizerKind, Sgd, Tape, Tensor};
use crate::error::{Error, Result};
use crate::nn::Mlp;
use crate::regularizers::{NormList, RegularizerKind};
use crate::replay::{Batch, ReplayBuffer, Transition};
use crate::rng::{self, tag};

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn combine<'a>(
    nets: impl IntoIterator<Item = &'a Mlp>,
    x: &Tensor,
    fold: impl Fn(&mut f64, f64),
) -> Result<(Tensor, usize)> {
    let mut iter = nets.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::Domain("empty ensemble".into()))?;
    let mut acc = first.forward(x)?;
    let mut count = 1;
    for net in iter {
        let q = net.forward(x)?;
        acc.data_mut()
            .iter_mut()
            .zip(q.data())
            .for_each(|(a, &b)| fold(a, b));
        count += 1;
    }
    Ok((acc, count))
}

/// Elementwise minimum over members' Q-values, `batch × actions`.
pub fn q_min<'a>(nets: impl IntoIterator<Item = &'a Mlp>, x: &Tensor) -> Result<Tensor> {
    Ok(combine(nets, x, |a, b| *a = a.min(b))?.0)
}

/// Elementwise mean over members' Q-values, `batch × actions`.
pub fn q_ens<'a>(nets: impl IntoIterator<Item = &'a Mlp>, x: &Tensor) -> Result<Tensor> {
    let (mut sum, n) = combine(nets, x, |a, b| *a += b)?;
    let inv = n as f64;
    sum.data_mut().iter_mut().for_each(|v| *v /= inv);
    Ok(sum)
}

#[derive(Debug, Clone)]
enum OptimizerState {
    Adam(Adam),
    Sgd(Sgd),
}

impl OptimizerState {
    fn new(kind: OptimizerKind, lr: f64) -> Self {
        match kind {
            OptimizerKind::Adam => OptimizerState::Adam(Adam::new(AdamConfig {
                lr,
                ..AdamConfig::default()
            })),
            OptimizerKind::Sgd => OptimizerState::Sgd(Sgd { lr }),
        }
    }

    fn step(&mut self, params: &mut [&mut Tensor], grads: &[Vec<f64>]) -> Result<()> {
        match self {
            OptimizerState::Adam(o) => o.step(params, grads),
            OptimizerState::Sgd(o) => o.step(params, grads),
        }
    }
}

/// One ensemble member: online network, its target copy and optimizer state.
#[derive(Debug, Clone)]
pub struct Member {
    pub online: Mlp,
    pub target: Mlp,
    optimizer: OptimizerState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    /// Full objective: TD loss minus `λ·I`.
    pub loss: f64,
    pub td_loss: f64,
    /// Regularizer value before weighting, when one is configured.
    pub reg_value: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub(super) config: AgentConfig,
    regularizer: Option<RegularizerKind>,
    num_actions: usize,
    obs_len: usize,
    pub(super) members: Vec<Member>,
    pub(super) buffer: ReplayBuffer,
    action_rng: ChaCha8Rng,
    member_rng: ChaCha8Rng,
    updates: u64,
}

impl Agent {
    pub fn new(config: AgentConfig, obs_len: usize, num_actions: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let regularizer = config.regularizer_kind()?;
        let layers = config.hidden.len() + 1;
        let members = (0..config.ensemble_size)
            .map(|i| {
                let seeds = config.seed_policy.layer_seeds(seed, i, layers);
                let online = Mlp::new(obs_len, &config.hidden, num_actions, &seeds)?;
                Ok(Member {
                    target: online.clone(),
                    online,
                    optimizer: OptimizerState::new(config.optimizer, config.learning_rate),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Agent {
            buffer: ReplayBuffer::new(config.buffer_capacity, rng::stream(seed, &[tag::REPLAY]))?,
            action_rng: rng::stream(seed, &[tag::ACTION]),
            member_rng: rng::stream(seed, &[tag::MEMBER]),
            regularizer,
            num_actions,
            obs_len,
            members,
            updates: 0,
            config,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn observation_len(&self) -> usize {
        self.obs_len
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    /// Mutable access to member networks, for tests that set up scenarios.
    pub fn members_mut(&mut self) -> &mut [Member] {
        &mut self.members
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn observe(&mut self, t: Transition) {
        self.buffer.push(t);
    }

    /// Per-member norms as fed to the regularizer.
    pub fn norms(&self) -> Vec<f64> {
        self.members
            .iter()
            .map(|m| self.apply_norm_form(m.online.squared_norm()))
            .collect()
    }

    fn apply_norm_form(&self, squared: f64) -> f64 {
        match self.config.norm_form {
            NormForm::Squared => squared,
            NormForm::Unsquared => squared.sqrt(),
        }
    }

    /// Current regularizer value over the online members, if configured.
    pub fn regularizer_value(&self) -> Result<Option<f64>> {
        match self.regularizer {
            Some(kind) => Ok(Some(kind.value(&NormList::new(self.norms())?, 0)?)),
            None => Ok(None),
        }
    }

    fn proxy<'a>(&self, nets: impl IntoIterator<Item = &'a Mlp>, x: &Tensor) -> Result<Tensor> {
        match self.config.algorithm {
            Algorithm::Dqn | Algorithm::Ddqn | Algorithm::Maxmin => q_min(nets, x),
            Algorithm::Ensemble => q_ens(nets, x),
        }
    }

    /// Action values the behaviour policy acts on: the single network for
    /// DQN/DDQN, `q_ens` for EnsembleDQN and `q_min` for MaxminDQN.
    pub fn q_values(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let x = Tensor::new(vec![1, obs.len()], obs.to_vec())?;
        Ok(self
            .proxy(self.members.iter().map(|m| &m.online), &x)?
            .into_data())
    }

    pub fn greedy_action(&self, obs: &[f64]) -> Result<usize> {
        Ok(argmax(&self.q_values(obs)?))
    }

    /// ε-greedy over [`Agent::q_values`].
    pub fn select_action(&mut self, obs: &[f64], epsilon: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Domain(format!("epsilon {epsilon} outside [0, 1]")));
        }
        let u: f64 = self.action_rng.random();
        if u < epsilon {
            Ok(self.action_rng.random_range(0..self.num_actions))
        } else {
            self.greedy_action(obs)
        }
    }

    /// Bootstrap targets `r + γ·(1 − done)·V(s′)` from the target networks.
    pub fn compute_target(&self, batch: &Batch) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::Domain("empty batch".into()));
        }
        let targets = self.members.iter().map(|m| &m.target);
        let next_values: Vec<f64> = match self.config.algorithm {
            Algorithm::Ddqn => {
                let online = self.members[0].online.forward(&batch.next_states)?;
                let target = self.members[0].target.forward(&batch.next_states)?;
                (0..batch.len())
                    .map(|r| target.row(r)[argmax(online.row(r))])
                    .collect()
            }
            _ => {
                let q = self.proxy(targets, &batch.next_states)?;
                (0..batch.len())
                    .map(|r| q.row(r)[argmax(q.row(r))])
                    .collect()
            }
        };
        Ok(batch
            .rewards
            .iter()
            .zip(&batch.dones)
            .zip(next_values)
            .map(|((&r, &done), v)| if done { r } else { r + self.config.gamma * v })
            .collect())
    }

    /// Records the loss for member `i` on `batch` and returns it with the
    /// parameter gradients, without touching any parameters.
    pub fn loss_and_grads(&self, i: usize, batch: &Batch) -> Result<(UpdateStats, Vec<Vec<f64>>)> {
        if i >= self.members.len() {
            return Err(Error::Domain(format!("member {i} out of range")));
        }
        let y = self.compute_target(batch)?;
        let net = &self.members[i].online;
        let mut tape = Tape::new();
        let x = tape.constant(batch.states.clone());
        let fwd = net.forward_tape(&mut tape, x)?;
        let qa = tape.gather_rows(fwd.output, &batch.actions)?;
        let yv = tape.constant(Tensor::vector(y));
        let diff = tape.sub(qa, yv)?;
        let sq = tape.square(diff)?;
        let td = tape.mean(sq)?;
        let td_loss = tape.value(td).item()?;

        let (loss, reg_value) = match self.regularizer {
            None => (td, None),
            Some(kind) => {
                let sqn = tape.squared_l2_norm(&fwd.params)?;
                let li = match self.config.norm_form {
                    NormForm::Squared => sqn,
                    NormForm::Unsquared => tape.sqrt(sqn)?,
                };
                let mut norms = self.norms();
                norms[i] = tape.value(li).item()?;
                let list = NormList::new(norms)?;
                let value = kind.value(&list, i)?;
                let slope = kind.grad(&list, i)?;
                let reg = tape.scalar_map(li, value, slope)?;
                let weighted = tape.scale(reg, -self.config.lambda)?;
                (tape.add(td, weighted)?, Some(value))
            }
        };
        let grads = tape.backward(loss)?;
        let per_param = fwd
            .params
            .iter()
            .zip(net.params())
            .map(|(&v, p)| grads.get_or_zeros(v, p.len()))
            .collect();
        let stats = UpdateStats {
            loss: tape.value(loss).item()?,
            td_loss,
            reg_value,
        };
        Ok((stats, per_param))
    }

    /// One optimizer step on member `i` only.
    pub fn update_member(&mut self, i: usize, batch: &Batch) -> Result<UpdateStats> {
        let (stats, mut grads) = self.loss_and_grads(i, batch)?;
        clip_grad_norm(&mut grads, self.config.grad_clip);
        let member = &mut self.members[i];
        let mut params = member.online.params_mut();
        member.optimizer.step(&mut params, &grads)?;
        for p in member.online.params() {
            p.ensure_finite("parameter update")?;
        }
        Ok(stats)
    }

    /// Samples a batch and updates one uniformly chosen member, syncing
    /// targets when the update count reaches the sync period.
    pub fn learn_step(&mut self) -> Result<UpdateStats> {
        let i = self.member_rng.random_range(0..self.members.len());
        let batch = self.buffer.sample_batch(self.config.batch_size)?;
        let stats = self.update_member(i, &batch)?;
        self.updates += 1;
        if self.updates.is_multiple_of(self.config.target_sync_period) {
            self.sync_targets();
        }
        Ok(stats)
    }

    pub fn sync_targets(&mut self) {
        for m in &mut self.members {
            m.target.clone_from(&m.online);
        }
    }
}
