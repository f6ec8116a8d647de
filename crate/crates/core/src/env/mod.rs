//! Synthetic multi-domain task-oriented dialog environment.

mod acts;
mod config;
mod goal;
mod metrics;
mod nlg;
mod rule;
mod simulator;
mod state;
mod trace;

pub use acts::{ActionSpace, CompositeAction, DialogAct, Intent, LabelSet, ReducedLabel, SlotRef, UserAct};
pub use config::{DomainSchema, EnvConfig, TemplateStyle, CONFIG_SCHEMA_VERSION};
pub use goal::{Database, DomainGoal, UserGoal};
pub use metrics::{DialogRecord, Metrics};
pub use nlg::{tokenize, Verbalizer};
pub use rule::RulePolicy;
pub use simulator::{DialogEnv, Observation, StepResult};
pub use state::{DialogState, StateLayout, TURN_BUCKETS};
pub use trace::{read_traces, write_traces, DialogTrace, Outcome, TraceStep};
