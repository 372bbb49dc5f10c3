//! Fixed-capacity experience replay: a ring buffer with oldest-first eviction
//! and uniform sampling with replacement.

use alloc::vec::Vec;
use rand::Rng;

use crate::{Action, Error, Result};

#[derive(Debug, Clone)]
pub struct Transition<O> {
    pub obs: O,
    pub action: Action,
    pub reward: f64,
    pub next_obs: O,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer<O> {
    items: Vec<Transition<O>>,
    capacity: usize,
    write: usize,
}

impl<O> ReplayBuffer<O> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("replay capacity must be positive"));
        }
        Ok(ReplayBuffer { items: Vec::new(), capacity, write: 0 })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition<O>) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.write] = t;
        }
        self.write = (self.write + 1) % self.capacity;
    }

    pub fn get(&self, i: usize) -> &Transition<O> {
        &self.items[i]
    }

    /// Uniform sample with replacement over the current contents.
    pub fn sample_indices<R: Rng + ?Sized>(&self, rng: &mut R, k: usize) -> Result<Vec<usize>> {
        if self.items.is_empty() {
            return Err(Error::invalid("cannot sample from an empty replay buffer"));
        }
        Ok((0..k).map(|_| rng.gen_range(0..self.items.len())).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition<O>> {
        self.items.iter()
    }
}
