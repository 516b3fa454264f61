//! Uniform experience replay.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: usize,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity ring buffer; once full, each push overwrites the oldest
/// entry.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: Vec<Transition>,
    next: usize,
    rng: ChaCha8Rng,
}

/// A sampled minibatch laid out for the networks.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Tensor,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_states: Tensor,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn from_transitions(items: &[&Transition]) -> Result<Batch> {
        if items.is_empty() {
            return Err(Error::Domain("empty batch".into()));
        }
        let s: Vec<&[f64]> = items.iter().map(|t| t.s.as_slice()).collect();
        let s2: Vec<&[f64]> = items.iter().map(|t| t.s_next.as_slice()).collect();
        Ok(Batch {
            states: Tensor::from_rows(&s)?,
            actions: items.iter().map(|t| t.a).collect(),
            rewards: items.iter().map(|t| t.r).collect(),
            next_states: Tensor::from_rows(&s2)?,
            dones: items.iter().map(|t| t.done).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

impl ReplayBuffer {
    pub fn new(capacity: usize, rng: ChaCha8Rng) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(ReplayBuffer {
            capacity,
            storage: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
            rng,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Entries from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.storage.len() < self.capacity { 0 } else { self.next };
        self.storage[split..].iter().chain(&self.storage[..split])
    }

    /// `batch_size` draws with replacement from the buffer's own stream.
    pub fn sample(&mut self, batch_size: usize) -> Result<Vec<&Transition>> {
        let idx = Self::draw(&mut self.rng, self.storage.len(), batch_size)?;
        Ok(idx.into_iter().map(|i| &self.storage[i]).collect())
    }

    pub fn sample_batch(&mut self, batch_size: usize) -> Result<Batch> {
        let items = self.sample(batch_size)?;
        Batch::from_transitions(&items)
    }

    /// Draws using an external stream, leaving the buffer's own untouched.
    pub fn sample_with(&self, rng: &mut ChaCha8Rng, batch_size: usize) -> Result<Vec<&Transition>> {
        let idx = Self::draw(rng, self.storage.len(), batch_size)?;
        Ok(idx.into_iter().map(|i| &self.storage[i]).collect())
    }

    fn draw(rng: &mut ChaCha8Rng, len: usize, batch_size: usize) -> Result<Vec<usize>> {
        if batch_size == 0 || len < batch_size {
            return Err(Error::NotReady {
                have: len,
                need: batch_size.max(1),
            });
        }
        Ok((0..batch_size).map(|_| rng.random_range(0..len)).collect())
    }
}
