use std::cell::Cell;

use rofl_core::agent::{AuxVariant, DqnAgent};
use rofl_core::env::{DialogEnv, EnvConfig, RulePolicy};
use rofl_core::experts::{
    Context, Demonstration, Expert, ExpertKind, FinetuneConfig, FinetuneData, RuleExpert,
};
use rofl_core::seed::{stream, Rng};
use rofl_core::trainer::{evaluate, evaluate_policy, run, Phase, RunConfig};
use rofl_core::{Error, Result};

/// Rule expert that counts demonstrations and logs fine-tune calls.
struct Spy {
    inner: RuleExpert,
    demos: Cell<usize>,
    /// (demonstrations so far, dialogs collected) at each fine-tune call.
    finetune_calls: Vec<(usize, usize)>,
}

impl Spy {
    fn new(env: &DialogEnv) -> Self {
        Self { inner: RuleExpert::new(env), demos: Cell::new(0), finetune_calls: Vec::new() }
    }
}

impl Expert for Spy {
    fn kind(&self) -> ExpertKind {
        ExpertKind::Rule
    }

    fn demonstrate(&self, ctx: &Context, rng: &mut Rng) -> Result<Demonstration> {
        self.demos.set(self.demos.get() + 1);
        self.inner.demonstrate(ctx, rng)
    }

    fn finetune(&mut self, data: &FinetuneData, _: &FinetuneConfig, _: &mut Rng) -> Result<Option<f64>> {
        self.finetune_calls.push((self.demos.get(), data.accepted.len() + data.rejected.len()));
        Ok((!data.is_empty()).then_some(0.0))
    }

    fn params(&self) -> &[f64] {
        &[]
    }
}

fn small(expert: Option<ExpertKind>, rofl: bool) -> RunConfig {
    let mut cfg = RunConfig::preset(expert, rofl, EnvConfig::desk(), 3);
    cfg.total_steps = 600;
    cfg.eval.every = 200;
    cfg.eval.dialogs = 5;
    cfg.eval.final_dialogs = 10;
    if expert.is_some() {
        cfg.rofl.prefill_dialogs = 6;
    }
    cfg
}

#[test]
fn presets_validate_and_round_trip() {
    for e in [None, Some(ExpertKind::Rule), Some(ExpertKind::Fle), Some(ExpertKind::Rle), Some(ExpertKind::Nle)] {
        for rofl in [false, true] {
            let cfg = RunConfig::benchmark(e, rofl, 1);
            cfg.validate().unwrap();
            let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(cfg.rofl.finetune_interval.is_some(), rofl && e.is_some());
        }
    }
    assert_eq!(RunConfig::benchmark(None, false, 1).variant, AuxVariant::None);
    assert_eq!(RunConfig::benchmark(None, false, 1).rofl.prefill_dialogs, 0);
}

#[test]
fn invalid_run_configs_are_rejected() {
    let mut cfg = small(Some(ExpertKind::Rule), true);
    cfg.rofl.finetune_interval = Some(0);
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    let mut cfg = small(Some(ExpertKind::Rule), true);
    cfg.rofl.threshold = cfg.env.max_dialog_reward();
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    let mut cfg = small(None, false);
    cfg.eval.final_dialogs = 0;
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
}

#[test]
fn prefill_without_an_expert_is_a_usage_error() {
    let mut cfg = small(None, false);
    cfg.rofl.prefill_dialogs = 3;
    assert!(matches!(run(&cfg, None), Err(Error::Usage(_))));
}

#[test]
fn zero_budget_records_only_the_initial_row() {
    let mut cfg = small(None, false);
    cfg.total_steps = 0;
    let out = run(&cfg, None).unwrap();
    assert_eq!(out.rows.len(), 1);
    assert_eq!(out.rows[0].step, 0);
    assert_eq!(out.summary.steps, 0);
    assert_eq!(out.summary.updates, 0);
}

#[test]
fn plain_dqn_run_has_no_demonstrations() {
    let cfg = small(None, false);
    let out = run(&cfg, None).unwrap();
    assert_eq!(out.summary.steps, 600);
    assert_eq!(out.summary.prefill_steps, 0);
    assert_eq!(out.summary.demo_transitions, 0);
    assert_eq!(out.summary.updates, 600);
    let steps: Vec<usize> = out.rows.iter().map(|r| r.step).collect();
    assert_eq!(steps, [0, 200, 400, 600]);
    assert!(out.rows[1..].iter().all(|r| r.phase == Phase::Rl && r.demos == 0));
}

#[test]
fn frozen_prefill_stores_every_demonstration() {
    let cfg = small(Some(ExpertKind::Rule), false);
    let env = DialogEnv::new(cfg.env.clone()).unwrap();
    let mut spy = Spy::new(&env);
    let out = run(&cfg, Some(&mut spy)).unwrap();
    assert!(spy.finetune_calls.is_empty());
    assert_eq!(spy.demos.get(), out.summary.prefill_steps);
    assert_eq!(out.summary.demo_transitions, out.summary.prefill_steps);
    // RoFL off collects no fine-tune data.
    assert!(out.finetune_data.accepted.is_empty() && out.finetune_data.rejected.is_empty());
    assert_eq!(out.summary.finetune_rounds, 0);
}

#[test]
fn fine_tuning_happens_every_k_steps_of_the_first_pass_only() {
    let mut cfg = small(Some(ExpertKind::Rule), true);
    cfg.rofl.finetune_interval = Some(7);
    let env = DialogEnv::new(cfg.env.clone()).unwrap();
    let mut spy = Spy::new(&env);
    let out = run(&cfg, Some(&mut spy)).unwrap();
    let d = cfg.rofl.prefill_dialogs;
    let calls = &spy.finetune_calls;
    assert!(!calls.is_empty());
    for (i, &(demos, dialogs)) in calls.iter().enumerate() {
        assert_eq!(demos, 7 * (i + 1));
        assert!(dialogs < d, "fine-tuned after the first pass ({dialogs} dialogs collected)");
    }
    let data = &out.finetune_data;
    assert_eq!(data.accepted.len() + data.rejected.len(), d);
    assert!(data.accepted.iter().all(|x| x.reward > cfg.rofl.threshold));
    assert!(data.rejected.iter().all(|x| x.reward <= cfg.rofl.threshold));
    // The rule expert wins nearly every desk dialog quickly.
    assert!(!data.accepted.is_empty());
    let first_pass: usize = data.accepted.iter().chain(&data.rejected).map(|x| x.turns.len()).sum();
    assert_eq!(calls.len(), first_pass / 7);
    assert_eq!(spy.demos.get(), out.summary.prefill_steps);
    assert_eq!(out.summary.accepted_dialogs, data.accepted.len());
}

#[test]
fn unreachable_threshold_leaves_the_fine_tune_set_empty() {
    let mut cfg = small(Some(ExpertKind::Rule), true);
    cfg.rofl.finetune_interval = Some(5);
    cfg.rofl.threshold = cfg.env.max_dialog_reward() - 1e-9;
    let env = DialogEnv::new(cfg.env.clone()).unwrap();
    let mut spy = Spy::new(&env);
    let out = run(&cfg, Some(&mut spy)).unwrap();
    assert!(out.finetune_data.accepted.is_empty());
    assert_eq!(out.finetune_data.rejected.len(), cfg.rofl.prefill_dialogs);
    assert_eq!(out.summary.finetune_rounds, 0);
}

#[test]
fn prefill_longer_than_the_budget_skips_rl() {
    let mut cfg = small(Some(ExpertKind::Rule), false);
    cfg.total_steps = 10;
    let env = DialogEnv::new(cfg.env.clone()).unwrap();
    let mut expert = RuleExpert::new(&env);
    let out = run(&cfg, Some(&mut expert)).unwrap();
    assert!(out.summary.prefill_steps > 10);
    assert_eq!(out.summary.steps, out.summary.prefill_steps);
    assert!(out.rows.iter().all(|r| r.phase != Phase::Rl));
}

#[test]
fn runs_are_reproducible() {
    let cfg = small(Some(ExpertKind::Rule), true);
    let env = DialogEnv::new(cfg.env.clone()).unwrap();
    let a = run(&cfg, Some(&mut RuleExpert::new(&env))).unwrap();
    let b = run(&cfg, Some(&mut RuleExpert::new(&env))).unwrap();
    assert_eq!(a.csv().unwrap(), b.csv().unwrap());
    assert_eq!(a.agent.params(), b.agent.params());
    let mut other = cfg.clone();
    other.seed += 1;
    let c = run(&other, Some(&mut RuleExpert::new(&env))).unwrap();
    assert_ne!(a.agent.params(), c.agent.params());
}

#[test]
fn output_files_are_written() {
    let cfg = small(None, false);
    let out = run(&cfg, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    out.write(dir.path(), &cfg).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(csv, out.csv().unwrap());
    assert_eq!(csv.lines().count(), out.rows.len() + 1);
    assert!(csv.starts_with("step,phase,epsilon,success_rate"));
    assert_eq!(RunConfig::load(&dir.path().join("config.json")).unwrap(), cfg);
    let agent = DqnAgent::load(&dir.path().join("q.json")).unwrap();
    assert_eq!(agent.params(), out.agent.params());
}

#[test]
fn rule_policy_solves_the_benchmark_environment() {
    let env = DialogEnv::new(EnvConfig::full_scale()).unwrap();
    let rule = RulePolicy::new(&env);
    let m = evaluate_policy(&env, 300, 5, stream::EVAL, |s, _| Ok(rule.act(s))).unwrap();
    assert!(m.success_rate >= 99.0, "rule success {}", m.success_rate);
}

#[test]
fn untrained_agent_rarely_succeeds() {
    let env = DialogEnv::new(EnvConfig::full_scale()).unwrap();
    let cfg = RunConfig::benchmark(None, false, 1);
    let agent = DqnAgent::new(cfg.agent, AuxVariant::None, env.state_dim(), env.n_actions(), 1).unwrap();
    let m = evaluate(&agent, &env, 300, 5, stream::EVAL).unwrap();
    assert!(m.success_rate < 10.0, "untrained success {}", m.success_rate);
}

#[test]
fn evaluation_is_repeatable_and_seed_dependent() {
    let env = DialogEnv::new(EnvConfig::desk()).unwrap();
    let agent = DqnAgent::new(Default::default(), AuxVariant::None, env.state_dim(), env.n_actions(), 2).unwrap();
    let a = evaluate(&agent, &env, 20, 9, stream::EVAL).unwrap();
    assert_eq!(a, evaluate(&agent, &env, 20, 9, stream::EVAL).unwrap());
    let mut texts = Vec::new();
    evaluate_policy(&env, 3, 9, stream::EVAL, |_, t| {
        texts.push(t.to_string());
        Ok(0)
    })
    .unwrap();
    let mut other = Vec::new();
    evaluate_policy(&env, 3, 10, stream::EVAL, |_, t| {
        other.push(t.to_string());
        Ok(0)
    })
    .unwrap();
    assert_ne!(texts, other);
}
