//! Dialog-manager training with Deep Q-learning from Demonstrations.
//!
//! The crate bundles a synthetic multi-domain dialog environment with an
//! agenda-based user simulator, corpus synthesis at three annotation
//! strengths, a small exact-gradient neural toolkit, prioritized replay,
//! DQN/DQfD agents with imitation margin losses, four expert demonstrators
//! and the reinforced fine-tuning (RoFL) training loop that adapts weak
//! experts to the environment while their demonstrations fill the buffer.

pub mod agent;
pub mod corpus;
pub mod env;
pub mod error;
pub mod experts;
pub mod nn;
pub mod replay;
pub mod seed;
pub mod trainer;

pub use error::{Error, Result};
