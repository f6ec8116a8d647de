use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sum_tree::SumTree;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayConfig {
    /// Capacity of the agent partition; demonstrations are stored on top.
    pub capacity: usize,
    pub alpha: f64,
    pub beta0: f64,
    pub eps_p: f64,
    pub eps_d: f64,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self { capacity: 20_000, alpha: 0.6, beta0: 0.4, eps_p: 0.001, eps_d: 1.0 }
    }
}

#[derive(Clone, Debug)]
struct Entry<T> {
    item: T,
    demo: bool,
    priority: f64,
}

/// Sampled indices with their probabilities and normalized importance weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub indices: Vec<usize>,
    pub probabilities: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Proportional prioritized replay with a permanent demonstration partition.
#[derive(Clone, Debug)]
pub struct PrioritizedBuffer<T> {
    config: ReplayConfig,
    entries: Vec<Entry<T>>,
    tree: SumTree,
    /// Slots of agent transitions, oldest first.
    agent_slots: VecDeque<usize>,
    demos: usize,
}

impl<T> PrioritizedBuffer<T> {
    pub fn new(config: ReplayConfig) -> Result<Self> {
        if config.capacity == 0 {
            return Err(Error::config("replay capacity must be positive"));
        }
        if config.eps_p <= 0.0 || config.eps_d < 0.0 || config.alpha < 0.0 {
            return Err(Error::config("replay constants must keep priorities positive"));
        }
        Ok(Self { config, entries: Vec::new(), tree: SumTree::new(), agent_slots: VecDeque::new(), demos: 0 })
    }

    pub fn config(&self) -> &ReplayConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn demo_len(&self) -> usize {
        self.demos
    }

    pub fn agent_len(&self) -> usize {
        self.agent_slots.len()
    }

    pub fn get(&self, index: usize) -> Option<&T> {
        self.entries.get(index).map(|e| &e.item)
    }

    pub fn is_demo(&self, index: usize) -> bool {
        self.entries[index].demo
    }

    pub fn priority(&self, index: usize) -> f64 {
        self.entries[index].priority
    }

    /// Sampling probability of a stored transition.
    pub fn probability(&self, index: usize) -> f64 {
        self.tree.weight(index) / self.tree.total()
    }

    fn set_priority(&mut self, index: usize, priority: f64) {
        self.entries[index].priority = priority;
        self.tree.set(index, priority.powf(self.config.alpha), priority);
    }

    /// Stores a transition at the current maximum priority (1 when empty).
    /// At capacity, a new agent transition replaces the oldest one.
    /// Returns the slot index.
    pub fn push(&mut self, item: T, demo: bool) -> usize {
        let priority = if self.entries.is_empty() { 1.0 } else { self.tree.max() };
        let entry = Entry { item, demo, priority };
        let slot = if !demo && self.agent_slots.len() >= self.config.capacity {
            let slot = self.agent_slots.pop_front().expect("capacity is positive");
            self.entries[slot] = entry;
            slot
        } else {
            self.entries.push(entry);
            self.entries.len() - 1
        };
        if demo {
            self.demos += 1;
        } else {
            self.agent_slots.push_back(slot);
        }
        self.set_priority(slot, priority);
        slot
    }

    /// Draws `batch_size` indices with replacement, P(i) ∝ p_i^α.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, beta: f64, rng: &mut R) -> Result<Batch> {
        if self.is_empty() {
            return Err(Error::usage("cannot sample from an empty buffer"));
        }
        let total = self.tree.total();
        let n = self.len() as f64;
        let mut indices = Vec::with_capacity(batch_size);
        let mut probabilities = Vec::with_capacity(batch_size);
        let mut weights = Vec::with_capacity(batch_size);
        for _ in 0..batch_size {
            let i = self.tree.find(rng.random::<f64>() * total);
            let p = self.tree.weight(i) / total;
            indices.push(i);
            probabilities.push(p);
            weights.push((n * p).powf(-beta));
        }
        let max_w = weights.iter().cloned().fold(0.0, f64::max);
        weights.iter_mut().for_each(|w| *w /= max_w);
        Ok(Batch { indices, probabilities, weights })
    }

    /// Sets p_i = |δ_i| + ε_p (+ ε_d for demonstrations).
    pub fn update_priorities(&mut self, indices: &[usize], td_errors: &[f64]) -> Result<()> {
        crate::error::check_len(indices.len(), td_errors.len())?;
        for (&i, &delta) in indices.iter().zip(td_errors) {
            if i >= self.len() {
                return Err(Error::usage(format!("replay index {i} out of range")));
            }
            let bonus = if self.entries[i].demo { self.config.eps_d } else { 0.0 };
            self.set_priority(i, delta.abs() + self.config.eps_p + bonus);
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, bool)> {
        self.entries.iter().map(|e| (&e.item, e.demo))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn buffer(capacity: usize, alpha: f64) -> PrioritizedBuffer<u32> {
        PrioritizedBuffer::new(ReplayConfig { capacity, alpha, ..ReplayConfig::default() }).unwrap()
    }

    #[test]
    fn first_push_has_unit_priority() {
        let mut b = buffer(4, 0.6);
        let i = b.push(7, false);
        assert_eq!(b.priority(i), 1.0);
        b.update_priorities(&[i], &[4.0]).unwrap();
        let j = b.push(8, false);
        assert!((b.priority(j) - 4.001).abs() < 1e-12);
    }

    #[test]
    fn probabilities_follow_priorities() {
        let mut b = buffer(4, 1.0);
        b.push(0, false);
        b.push(1, false);
        b.update_priorities(&[0, 1], &[1.0 - 0.001, 3.0 - 0.001]).unwrap();
        assert!((b.probability(0) - 0.25).abs() < 1e-12);
        assert!((b.probability(1) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn equal_priorities_give_unit_weights() {
        let mut b = buffer(8, 0.6);
        for i in 0..5 {
            b.push(i, false);
        }
        let batch = b.sample(32, 0.4, &mut seed::rng(0, 0)).unwrap();
        assert!(batch.weights.iter().all(|&w| (w - 1.0).abs() < 1e-12));
        assert!(batch.probabilities.iter().all(|&p| (p - 0.2).abs() < 1e-12));
    }

    #[test]
    fn priority_floor_and_demo_bonus() {
        let mut b = buffer(8, 0.6);
        let a = b.push(0, false);
        let d = b.push(1, true);
        b.update_priorities(&[a, d], &[0.0, 0.0]).unwrap();
        assert_eq!(b.priority(a), 0.001);
        assert!((b.priority(d) - 1.001).abs() < 1e-12);
    }

    #[test]
    fn agent_partition_is_fifo_and_demos_persist() {
        let mut b = buffer(3, 0.6);
        b.push(100, true);
        for i in 0..5 {
            b.push(i, false);
        }
        assert_eq!(b.len(), 4);
        assert_eq!(b.demo_len(), 1);
        let mut agent: Vec<u32> = b.iter().filter(|(_, d)| !d).map(|(x, _)| *x).collect();
        agent.sort();
        assert_eq!(agent, vec![2, 3, 4]);
        assert!(b.iter().any(|(x, d)| d && *x == 100));
    }

    #[test]
    fn sampling_errors() {
        let mut b = buffer(3, 0.6);
        assert!(b.sample(1, 0.4, &mut seed::rng(0, 0)).is_err());
        b.push(1, false);
        assert!(b.update_priorities(&[5], &[0.0]).is_err());
        assert!(b.update_priorities(&[0, 0], &[0.0]).is_err());
        assert_eq!(b.sample(10, 0.4, &mut seed::rng(0, 0)).unwrap().indices, vec![0; 10]);
    }
}
