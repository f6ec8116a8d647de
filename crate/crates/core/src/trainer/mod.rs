//! The RoFL training loop: expert pre-fill with online fine-tuning, a frozen
//! pre-fill pass, then ε-greedy DQfD training with periodic evaluation.

use std::fs;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::agent::{linear_schedule, AgentConfig, Annotation, AuxVariant, DqnAgent, LossComponents, Transition};
use crate::env::{DialogEnv, DialogRecord, DialogState, EnvConfig, Metrics};
use crate::experts::{Context, Expert, ExpertKind, FinetuneConfig, FinetuneData, FinetuneDialog, FinetuneTurn};
use crate::replay::{PrioritizedBuffer, ReplayConfig};
use crate::seed::{self, stream, Rng};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoflConfig {
    /// Pre-fill length d, in dialogs.
    pub prefill_dialogs: usize,
    /// Fine-tune interval k in pre-fill steps; `None` disables fine-tuning.
    pub finetune_interval: Option<usize>,
    /// Reward threshold th a dialog must exceed to enter the fine-tune set.
    pub threshold: f64,
    /// Run the Q-network update during pre-fill as well.
    pub train_during_prefill: bool,
    pub finetune: FinetuneConfig,
}

impl Default for RoflConfig {
    fn default() -> Self {
        Self {
            prefill_dialogs: 80,
            finetune_interval: None,
            threshold: 70.0,
            train_during_prefill: true,
            finetune: FinetuneConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Steps between evaluations; 0 evaluates only at the start.
    pub every: usize,
    pub dialogs: usize,
    pub final_dialogs: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { every: 2_000, dialogs: 100, final_dialogs: 1_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub agent: AgentConfig,
    pub replay: ReplayConfig,
    pub rofl: RoflConfig,
    pub eval: EvalConfig,
    pub variant: AuxVariant,
    /// Environment steps of the whole run, pre-fill included.
    pub total_steps: usize,
    pub seed: u64,
}

impl RunConfig {
    /// The benchmark settings: [`RunConfig::preset`] on the seven-domain environment.
    pub fn benchmark(expert: Option<ExpertKind>, rofl: bool, seed: u64) -> Self {
        Self::preset(expert, rofl, EnvConfig::full_scale(), seed)
    }

    /// Run settings for an expert (or plain DQN when `None`) in `env`.
    pub fn preset(expert: Option<ExpertKind>, rofl: bool, env: EnvConfig, seed: u64) -> Self {
        let mut cfg = Self {
            env,
            // At 0.01 the Q-network stalls far below the demonstrator.
            agent: AgentConfig { learning_rate: 0.001, ..AgentConfig::default() },
            replay: ReplayConfig::default(),
            rofl: RoflConfig::default(),
            eval: EvalConfig::default(),
            variant: AuxVariant::None,
            total_steps: 100_000,
            seed,
        };
        // d and k are the published settings scaled to the 25x shorter run.
        match expert {
            None => cfg.rofl.prefill_dialogs = 0,
            Some(ExpertKind::Rule | ExpertKind::Fle) => {
                cfg.variant = AuxVariant::FullLabel;
                cfg.rofl.finetune_interval = rofl.then_some(80);
            }
            Some(ExpertKind::Rle) => {
                cfg.variant = AuxVariant::ReducedLabel;
                cfg.agent.eps_start = 0.2;
                cfg.agent.margin = 1.0;
                cfg.rofl.prefill_dialogs = 120;
                cfg.rofl.finetune_interval = rofl.then_some(600);
            }
            Some(ExpertKind::Nle) => {
                cfg.variant = AuxVariant::NoLabel;
                cfg.rofl.finetune_interval = rofl.then_some(600);
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.agent.validate()?;
        if self.rofl.finetune_interval == Some(0) {
            return Err(Error::config("fine-tune interval must be positive"));
        }
        if self.rofl.threshold >= self.env.max_dialog_reward() {
            return Err(Error::config(format!(
                "threshold {} is not below the best achievable dialog reward {}",
                self.rofl.threshold,
                self.env.max_dialog_reward()
            )));
        }
        if self.eval.dialogs == 0 || self.eval.final_dialogs == 0 {
            return Err(Error::config("evaluation needs at least one dialog"));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_slice(&fs::read(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Prefill,
    Frozen,
    Rl,
}

/// One evaluation checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: usize,
    pub phase: Phase,
    pub epsilon: f64,
    pub success_rate: f64,
    pub match_rate: f64,
    pub inform_f1: f64,
    pub turns: f64,
    pub mean_reward: f64,
    /// Loss components averaged over the updates since the previous row.
    pub loss_td: f64,
    pub loss_margin: f64,
    pub loss_indicator: f64,
    pub loss_total: f64,
    pub updates: u64,
    pub demos: usize,
    pub finetune_rounds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub variant: AuxVariant,
    pub expert: Option<ExpertKind>,
    pub rofl: bool,
    pub steps: usize,
    pub prefill_steps: usize,
    pub demo_transitions: usize,
    pub finetune_rounds: usize,
    pub accepted_dialogs: usize,
    pub rejected_dialogs: usize,
    pub updates: u64,
    pub config_hash: String,
    #[serde(rename = "final")]
    pub final_metrics: Metrics,
}

pub struct RunOutput {
    pub rows: Vec<MetricsRow>,
    pub summary: RunSummary,
    pub agent: DqnAgent,
    pub finetune_data: FinetuneData,
}

impl RunOutput {
    pub fn csv(&self) -> Result<String> {
        metrics_csv(&self.rows)
    }

    /// Writes `metrics.csv`, `summary.json`, `config.json` and the Q-network checkpoint.
    pub fn write(&self, dir: &Path, config: &RunConfig) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("metrics.csv"), self.csv()?)?;
        fs::write(dir.join("summary.json"), serde_json::to_vec_pretty(&self.summary)?)?;
        fs::write(dir.join("config.json"), serde_json::to_vec_pretty(config)?)?;
        self.agent.save(&dir.join("q.json"), config.seed)
    }
}

pub fn metrics_csv(rows: &[MetricsRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Runs `n` dialogs with `policy` and aggregates their records. Goal seeds are
/// derived from `seed` and `tag`, so the same arguments give the same dialogs.
pub fn evaluate_policy(
    env: &DialogEnv,
    n: usize,
    seed: u64,
    tag: u64,
    mut policy: impl FnMut(&DialogState, &str) -> Result<usize>,
) -> Result<Metrics> {
    let mut env = env.clone();
    let base = seed::derive(seed, tag);
    let mut records: Vec<DialogRecord> = Vec::with_capacity(n);
    for i in 0..n {
        let mut state = env.reset(seed::derive(base, i as u64)).state;
        while !env.is_done() {
            let text = env.user_text()?;
            let action = policy(&state, &text)?;
            state = env.step(action)?.state;
        }
        records.push(env.record()?);
    }
    Ok(Metrics::aggregate(&records))
}

/// Greedy (ε = 0) evaluation of the agent.
pub fn evaluate(agent: &DqnAgent, env: &DialogEnv, n: usize, seed: u64, tag: u64) -> Result<Metrics> {
    evaluate_policy(env, n, seed, tag, |s, _| Ok(agent.greedy(&s.features())))
}

#[derive(Default)]
struct LossAccumulator {
    sum: LossComponents,
    n: usize,
}

impl LossAccumulator {
    fn add(&mut self, l: &LossComponents) {
        self.sum.td += l.td;
        self.sum.margin += l.margin;
        self.sum.indicator += l.indicator;
        self.sum.total += l.total;
        self.n += 1;
    }

    fn take(&mut self) -> [f64; 4] {
        let n = self.n.max(1) as f64;
        let out = [self.sum.td / n, self.sum.margin / n, self.sum.indicator / n, self.sum.total / n];
        *self = Self::default();
        out
    }
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    env: DialogEnv,
    agent: DqnAgent,
    buffer: PrioritizedBuffer<Transition>,
    goals: Rng,
    explore: Rng,
    replay: Rng,
    demo: Rng,
    finetune_rng: Rng,
    step: usize,
    rl_step: usize,
    phase: Phase,
    losses: LossAccumulator,
    rows: Vec<MetricsRow>,
    data: FinetuneData,
    finetune_rounds: usize,
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self> {
        let env = DialogEnv::new(cfg.env.clone())?;
        let agent = DqnAgent::new(cfg.agent.clone(), cfg.variant, env.state_dim(), env.n_actions(), cfg.seed)?;
        Ok(Self {
            buffer: PrioritizedBuffer::new(cfg.replay.clone())?,
            goals: seed::rng(cfg.seed, stream::GOALS),
            explore: seed::rng(cfg.seed, stream::EXPLORE),
            replay: seed::rng(cfg.seed, stream::REPLAY),
            demo: seed::rng(cfg.seed, stream::EXPERT),
            finetune_rng: seed::rng(cfg.seed, stream::FINETUNE),
            step: 0,
            rl_step: 0,
            phase: Phase::Prefill,
            losses: LossAccumulator::default(),
            rows: Vec::new(),
            data: FinetuneData::new(cfg.rofl.threshold),
            finetune_rounds: 0,
            cfg,
            env,
            agent,
        })
    }

    fn epsilon(&self) -> f64 {
        self.agent.config().epsilon(self.rl_step)
    }

    fn beta(&self) -> f64 {
        linear_schedule(self.cfg.replay.beta0, 1.0, self.cfg.agent.eps_horizon, self.rl_step)
    }

    fn record_row(&mut self) -> Result<()> {
        let m = evaluate(&self.agent, &self.env, self.cfg.eval.dialogs, self.cfg.seed, stream::EVAL)?;
        let [td, margin, indicator, total] = self.losses.take();
        self.rows.push(MetricsRow {
            step: self.step,
            phase: self.phase,
            epsilon: if self.phase == Phase::Rl { self.epsilon() } else { 0.0 },
            success_rate: m.success_rate,
            match_rate: m.match_rate,
            inform_f1: m.inform_f1,
            turns: m.turns,
            mean_reward: m.mean_reward,
            loss_td: td,
            loss_margin: margin,
            loss_indicator: indicator,
            loss_total: total,
            updates: self.agent.updates(),
            demos: self.buffer.demo_len(),
            finetune_rounds: self.finetune_rounds,
        });
        Ok(())
    }

    /// Bookkeeping after every environment step: `train` every η steps, and
    /// evaluation on schedule.
    fn after_step(&mut self) -> Result<()> {
        self.step += 1;
        let training = self.phase == Phase::Rl || self.cfg.rofl.train_during_prefill;
        if training && self.step.is_multiple_of(self.cfg.agent.train_interval) && !self.buffer.is_empty() {
            let beta = self.beta();
            let l = self.agent.update(&mut self.buffer, beta, &mut self.replay)?;
            self.losses.add(&l);
        }
        if self.cfg.eval.every > 0 && self.step.is_multiple_of(self.cfg.eval.every) {
            self.record_row()?;
        }
        Ok(())
    }

    /// One expert-driven dialog; returns it for the fine-tune set.
    fn demo_dialog(&mut self, expert: &mut dyn Expert, phase_steps: &mut usize) -> Result<FinetuneDialog> {
        let goal_seed = self.goals.random::<u64>();
        let mut state = self.env.reset(goal_seed).state;
        let mut turns = Vec::new();
        let mut reward = 0.0;
        while !self.env.is_done() {
            let user_text = self.env.user_text()?;
            let demo = expert.demonstrate(&Context { state: &state, user_text: &user_text }, &mut self.demo)?;
            let agent_text = self.env.system_text(&self.env.action_space().get(demo.action)?.acts)?;
            let res = self.env.step(demo.action)?;
            reward += res.reward;
            self.buffer.push(
                Transition {
                    state: state.features(),
                    action: demo.action,
                    reward: res.reward,
                    next_state: res.state.features(),
                    terminal: res.done,
                    annotation: demo.annotation,
                },
                true,
            );
            turns.push(FinetuneTurn { state, action: demo.action, user_text, agent_text });
            state = res.state;
            *phase_steps += 1;
            self.after_step()?;
            if self.phase == Phase::Prefill {
                if let Some(k) = self.cfg.rofl.finetune_interval {
                    if phase_steps.is_multiple_of(k) {
                        if let Some(loss) = expert.finetune(&self.data, &self.cfg.rofl.finetune, &mut self.finetune_rng)? {
                            self.finetune_rounds += 1;
                            log::debug!("fine-tune round {} at step {}: loss {loss:.4}", self.finetune_rounds, self.step);
                        }
                    }
                }
            }
        }
        Ok(FinetuneDialog { reward, turns })
    }

    /// Phase 1: d dialogs with online fine-tuning every k steps.
    fn prefill_phase(&mut self, expert: &mut dyn Expert) -> Result<()> {
        self.phase = Phase::Prefill;
        let mut phase_steps = 0;
        for _ in 0..self.cfg.rofl.prefill_dialogs {
            let dialog = self.demo_dialog(expert, &mut phase_steps)?;
            self.data.add(dialog);
        }
        Ok(())
    }

    /// d further dialogs from the expert with its parameters frozen.
    fn frozen_prefill(&mut self, expert: &mut dyn Expert) -> Result<()> {
        self.phase = Phase::Frozen;
        let mut phase_steps = 0;
        for _ in 0..self.cfg.rofl.prefill_dialogs {
            self.demo_dialog(expert, &mut phase_steps)?;
        }
        Ok(())
    }

    /// ε-greedy interaction until the step budget is spent.
    fn rl_phase(&mut self) -> Result<()> {
        self.phase = Phase::Rl;
        let mut state: Option<DialogState> = None;
        while self.step < self.cfg.total_steps {
            let s = match state.take() {
                Some(s) => s,
                None => self.env.reset(self.goals.random::<u64>()).state,
            };
            let x = s.features();
            let a = self.agent.select_action(&x, self.epsilon(), &mut self.explore);
            let res = self.env.step(a)?;
            self.buffer.push(
                Transition {
                    state: x,
                    action: a,
                    reward: res.reward,
                    next_state: res.state.features(),
                    terminal: res.done,
                    annotation: Annotation::None,
                },
                false,
            );
            if !res.done {
                state = Some(res.state);
            }
            self.rl_step += 1;
            self.after_step()?;
        }
        Ok(())
    }
}

/// Runs a whole training session. `expert` is required whenever pre-fill is
/// enabled (d > 0); it is fine-tuned in place when RoFL is on.
pub fn run(cfg: &RunConfig, mut expert: Option<&mut dyn Expert>) -> Result<RunOutput> {
    cfg.validate()?;
    if cfg.rofl.prefill_dialogs > 0 && expert.is_none() {
        return Err(Error::usage("pre-fill needs an expert"));
    }
    let mut r = Runner::new(cfg)?;
    r.record_row()?;
    if let Some(expert) = expert.as_deref_mut() {
        if cfg.rofl.finetune_interval.is_some() {
            r.prefill_phase(expert)?;
            log::info!(
                "pre-fill done: {} dialogs accepted, {} fine-tune rounds",
                r.data.accepted.len(),
                r.finetune_rounds
            );
        }
        r.frozen_prefill(expert)?;
    }
    let prefill_steps = r.step;
    r.rl_phase()?;
    let final_metrics = evaluate(&r.agent, &r.env, cfg.eval.final_dialogs, cfg.seed, stream::FINAL_EVAL)?;
    let summary = RunSummary {
        seed: cfg.seed,
        variant: cfg.variant,
        expert: expert.as_ref().map(|e| e.kind()),
        rofl: cfg.rofl.finetune_interval.is_some(),
        steps: r.step,
        prefill_steps,
        demo_transitions: r.buffer.demo_len(),
        finetune_rounds: r.finetune_rounds,
        accepted_dialogs: r.data.accepted.len(),
        rejected_dialogs: r.data.rejected.len(),
        updates: r.agent.updates(),
        config_hash: cfg.env.hash(),
        final_metrics,
    };
    Ok(RunOutput { rows: r.rows, summary, agent: r.agent, finetune_data: r.data })
}
