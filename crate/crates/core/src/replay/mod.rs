//! Prioritized experience replay with a permanent demonstration partition.

mod buffer;
mod sum_tree;

pub use buffer::{Batch, PrioritizedBuffer, ReplayConfig};
pub use sum_tree::SumTree;

