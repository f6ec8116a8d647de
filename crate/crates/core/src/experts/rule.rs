use super::{Context, Demonstration, Expert, ExpertKind, FinetuneConfig, FinetuneData};
use crate::agent::Annotation;
use crate::env::{DialogEnv, RulePolicy};
use crate::seed::Rng;
use crate::Result;

/// The hand-written policy used as a demonstrator. Nothing to fine-tune.
#[derive(Clone, Debug)]
pub struct RuleExpert {
    policy: RulePolicy,
}

impl RuleExpert {
    pub fn new(env: &DialogEnv) -> Self {
        Self { policy: RulePolicy::new(env) }
    }
}

impl Expert for RuleExpert {
    fn kind(&self) -> ExpertKind {
        ExpertKind::Rule
    }

    fn demonstrate(&self, ctx: &Context, _rng: &mut Rng) -> Result<Demonstration> {
        let action = self.policy.act(ctx.state);
        Ok(Demonstration { action, annotation: Annotation::Action(action) })
    }

    fn finetune(&mut self, _data: &FinetuneData, _config: &FinetuneConfig, _rng: &mut Rng) -> Result<Option<f64>> {
        Ok(None)
    }

    fn params(&self) -> &[f64] {
        &[]
    }
}
