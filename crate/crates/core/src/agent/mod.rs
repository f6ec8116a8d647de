//! DQN and DQfD agents.

mod dqn;
pub mod losses;

pub use dqn::{
    linear_schedule, AgentConfig, Annotation, AuxVariant, DqnAgent, LossComponents, Transition,
};
pub use losses::{argmax, aux_loss_fle, aux_loss_nle, aux_loss_rle, q_loss, set_margin_loss};
