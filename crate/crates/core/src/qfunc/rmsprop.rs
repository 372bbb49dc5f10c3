//! RMSProp: per-parameter moving average of squared gradients.

use alloc::vec;
use alloc::vec::Vec;

use crate::{math, Error, Result};

#[derive(Debug, Clone)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    sq_avg: Vec<f64>,
}

impl RmsProp {
    pub const DEFAULT_DECAY: f64 = 0.95;
    pub const DEFAULT_EPSILON: f64 = 1e-6;

    pub fn new(learning_rate: f64, num_params: usize) -> Result<Self> {
        Self::with_hyper(learning_rate, Self::DEFAULT_DECAY, Self::DEFAULT_EPSILON, num_params)
    }

    pub fn with_hyper(
        learning_rate: f64,
        decay: f64,
        epsilon: f64,
        num_params: usize,
    ) -> Result<Self> {
        if !(learning_rate > 0.0) {
            return Err(Error::config("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&decay) {
            return Err(Error::config("decay must lie in [0, 1)"));
        }
        if !(epsilon > 0.0) {
            return Err(Error::config("epsilon must be positive"));
        }
        Ok(RmsProp { learning_rate, decay, epsilon, sq_avg: vec![0.0; num_params] })
    }

    pub fn sq_avg(&self) -> &[f64] {
        &self.sq_avg
    }

    pub fn sq_avg_mut(&mut self) -> &mut [f64] {
        &mut self.sq_avg
    }

    /// One update: sq ← ρ·sq + (1−ρ)·g²; p ← p − lr·g/(√sq + ε).
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.sq_avg.len() || grad.len() != self.sq_avg.len() {
            return Err(Error::invalid(format_args!(
                "optimizer state for {} parameters applied to {} params / {} grads",
                self.sq_avg.len(),
                params.len(),
                grad.len()
            )));
        }
        for ((p, &g), sq) in params.iter_mut().zip(grad).zip(self.sq_avg.iter_mut()) {
            *sq = self.decay * *sq + (1.0 - self.decay) * g * g;
            *p -= self.learning_rate * g / (math::sqrt(*sq) + self.epsilon);
        }
        Ok(())
    }
}
