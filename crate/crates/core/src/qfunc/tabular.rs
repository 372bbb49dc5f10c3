//! Tabular Q-function over a fixed-grid discretization of continuous
//! observations; used by the toy-MDP suites.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::QFunction;
use crate::{math, Action, Error, Result};

#[derive(Debug, Clone)]
pub struct TabularQ {
    input_len: usize,
    resolution: f64,
    table: BTreeMap<Vec<i64>, [f64; Action::COUNT]>,
}

impl TabularQ {
    pub fn new(input_len: usize, resolution: f64) -> Result<Self> {
        if input_len == 0 {
            return Err(Error::config("input length must be positive"));
        }
        if !(resolution > 0.0) {
            return Err(Error::config("resolution must be positive"));
        }
        Ok(TabularQ { input_len, resolution, table: BTreeMap::new() })
    }

    /// Half-unit grid keys, the default discretizer.
    pub fn half_unit(input_len: usize) -> Result<Self> {
        TabularQ::new(input_len, 0.5)
    }

    pub fn key(&self, obs: &[f64]) -> Vec<i64> {
        obs.iter().map(|&v| math::round(v / self.resolution) as i64).collect()
    }

    pub fn entry(&mut self, obs: &[f64]) -> &mut [f64; Action::COUNT] {
        let key = self.key(obs);
        self.table.entry(key).or_insert([0.0; Action::COUNT])
    }

    pub fn set(&mut self, obs: &[f64], action: Action, value: f64) {
        self.entry(obs)[action.index()] = value;
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl QFunction for TabularQ {
    fn input_len(&self) -> usize {
        self.input_len
    }

    fn q_values(&self, input: &[f64]) -> Result<[f64; Action::COUNT]> {
        if input.len() != self.input_len {
            return Err(Error::invalid(format_args!(
                "expected input of length {}, got {}",
                self.input_len,
                input.len()
            )));
        }
        Ok(self.table.get(&self.key(input)).copied().unwrap_or([0.0; Action::COUNT]))
    }
}
