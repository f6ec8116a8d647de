use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::losses::{argmax, aux_loss_fle, aux_loss_rle, q_loss, set_margin_loss};
use crate::nn::{checkpoint, BlockInfo, DuelingCache, DuelingQNet, ParamStore, Radam};
use crate::replay::PrioritizedBuffer;
use crate::seed::{self, stream};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub gamma: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Steps over which ε (and the replay β) anneal linearly.
    pub eps_horizon: usize,
    /// Target network sync period τ, in updates.
    pub target_sync: u64,
    pub learning_rate: f64,
    pub l2: f64,
    /// Margin constant c of the auxiliary loss.
    pub margin: f64,
    /// Environment steps between updates (η).
    pub train_interval: usize,
    pub batch_size: usize,
    pub hidden: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            eps_start: 0.1,
            eps_end: 0.01,
            eps_horizon: 20_000,
            target_sync: 1_000,
            learning_rate: 0.01,
            l2: 1e-5,
            margin: 0.8,
            train_interval: 1,
            batch_size: 32,
            hidden: 100,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::config("gamma must lie in (0, 1]"));
        }
        if self.target_sync == 0 || self.train_interval == 0 || self.batch_size == 0 || self.hidden == 0 {
            return Err(Error::config("target_sync, train_interval, batch_size and hidden must be positive"));
        }
        if self.margin < 0.0 {
            return Err(Error::config("margin must be non-negative"));
        }
        for eps in [self.eps_start, self.eps_end] {
            if !(0.0..=1.0).contains(&eps) {
                return Err(Error::config("epsilon must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn epsilon(&self, step: usize) -> f64 {
        linear_schedule(self.eps_start, self.eps_end, self.eps_horizon, step)
    }
}

/// Linear interpolation from `start` to `end` over `horizon` steps, then flat.
pub fn linear_schedule(start: f64, end: f64, horizon: usize, step: usize) -> f64 {
    if horizon == 0 || step >= horizon {
        return end;
    }
    start + (end - start) * step as f64 / horizon as f64
}

/// Which auxiliary loss is applied to demonstrations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxVariant {
    None,
    FullLabel,
    ReducedLabel,
    NoLabel,
}

/// Expert signal attached to a demonstration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Annotation {
    None,
    /// Expert action a_E.
    Action(usize),
    /// Actions allowed by the expert (reduced-label or admissible set).
    Set(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
    pub annotation: Annotation,
}

/// Mean loss terms of one update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    /// Importance-weighted squared TD error.
    pub td: f64,
    /// Differentiable margin term on demonstrations.
    pub margin: f64,
    /// Literal 0/c set penalties (no gradient); zero for the full-label variant.
    pub indicator: f64,
    pub total: f64,
    pub demos: usize,
}

/// Dueling double-DQN agent with an optional demonstration margin loss.
#[derive(Clone, Debug)]
pub struct DqnAgent {
    config: AgentConfig,
    variant: AuxVariant,
    net: DuelingQNet,
    params: ParamStore,
    target: Vec<f64>,
    optimizer: Radam,
    updates: u64,
}

#[derive(Serialize, Deserialize)]
struct AgentMeta {
    config: AgentConfig,
    variant: AuxVariant,
    state_dim: usize,
    actions: usize,
}

impl DqnAgent {
    pub fn new(config: AgentConfig, variant: AuxVariant, state_dim: usize, actions: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = seed::rng(seed, stream::NET_INIT);
        let mut params = ParamStore::new();
        let net = DuelingQNet::new(&mut params, state_dim, config.hidden, actions, &mut rng);
        let optimizer = Radam::new(params.len(), config.learning_rate, config.l2);
        Ok(Self { target: params.values.clone(), config, variant, net, params, optimizer, updates: 0 })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn variant(&self) -> AuxVariant {
        self.variant
    }

    pub fn n_actions(&self) -> usize {
        self.net.actions()
    }

    pub fn state_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn params(&self) -> &[f64] {
        &self.params.values
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params.values
    }

    pub fn target_params(&self) -> &[f64] {
        &self.target
    }

    pub fn target_params_mut(&mut self) -> &mut [f64] {
        &mut self.target
    }

    /// Named parameter blocks, shared by the online and target networks.
    pub fn blocks(&self) -> &[BlockInfo] {
        self.params.blocks()
    }

    pub fn sync_target(&mut self) {
        self.target.copy_from_slice(&self.params.values);
    }

    pub fn q_values(&self, state: &[f64]) -> Vec<f64> {
        self.net.q_values(&self.params.values, state)
    }

    pub fn greedy(&self, state: &[f64]) -> usize {
        argmax(&self.q_values(state))
    }

    /// ε-greedy: uniform with probability ε, otherwise the lowest-index argmax.
    pub fn select_action<R: Rng + ?Sized>(&self, state: &[f64], epsilon: f64, rng: &mut R) -> usize {
        if epsilon > 0.0 && rng.random::<f64>() < epsilon {
            rng.random_range(0..self.n_actions())
        } else {
            self.greedy(state)
        }
    }

    /// Double-DQN target: the online network picks a', the target network scores it.
    pub fn td_target(&self, t: &Transition) -> f64 {
        if t.terminal {
            return t.reward;
        }
        let next = argmax(&self.net.q_values(&self.params.values, &t.next_state));
        t.reward + self.config.gamma * self.net.q_values(&self.target, &t.next_state)[next]
    }

    /// Loss, gradient and TD errors of `batch` at `params`, with targets held fixed.
    pub fn loss_and_grad(
        &self,
        params: &[f64],
        batch: &[&Transition],
        weights: &[f64],
        targets: &[f64],
    ) -> (LossComponents, Vec<f64>, Vec<f64>) {
        let n = batch.len() as f64;
        let c = self.config.margin;
        let mut grads = vec![0.0; params.len()];
        let mut td_errors = Vec::with_capacity(batch.len());
        let mut parts = LossComponents::default();
        for ((t, &w), &y) in batch.iter().zip(weights).zip(targets) {
            let cache: DuelingCache = self.net.forward_cached(params, &t.state);
            let q = &cache.q;
            let mut dq = vec![0.0; q.len()];
            let (l, g) = q_loss(q[t.action], y, w);
            parts.td += l / n;
            dq[t.action] += g / n;
            td_errors.push(y - q[t.action]);
            let aux = match (&self.variant, &t.annotation) {
                (AuxVariant::None, _) | (_, Annotation::None) => None,
                (AuxVariant::FullLabel, Annotation::Action(a)) => Some((aux_loss_fle(q, *a, c), 0.0)),
                (AuxVariant::FullLabel, Annotation::Set(_)) => None,
                (_, Annotation::Action(a)) => Some((set_margin_loss(q, &[*a], c), aux_loss_rle(q, &[*a], c))),
                (_, Annotation::Set(s)) => Some((set_margin_loss(q, s, c), aux_loss_rle(q, s, c))),
            };
            if let Some(((l, g), indicator)) = aux {
                parts.demos += 1;
                parts.margin += l / n;
                parts.indicator += indicator / n;
                dq.iter_mut().zip(&g).for_each(|(d, g)| *d += g / n);
            }
            self.net.backward(params, &cache, &dq, &mut grads);
        }
        parts.total = parts.td + parts.margin + parts.indicator;
        (parts, grads, td_errors)
    }

    /// One DQfD update: sample, one optimizer step, refresh priorities and
    /// sync the target network every τ updates.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        buffer: &mut PrioritizedBuffer<Transition>,
        beta: f64,
        rng: &mut R,
    ) -> Result<LossComponents> {
        let sample = buffer.sample(self.config.batch_size, beta, rng)?;
        let batch: Vec<&Transition> = sample
            .indices
            .iter()
            .map(|&i| buffer.get(i).expect("sampled index is stored"))
            .collect();
        let targets: Vec<f64> = batch.iter().map(|t| self.td_target(t)).collect();
        let (parts, grads, td) = self.loss_and_grad(&self.params.values, &batch, &sample.weights, &targets);
        self.optimizer.update(&mut self.params.values, &grads)?;
        if !self.params.is_finite() {
            return Err(Error::usage("Q-network parameters diverged to non-finite values"));
        }
        self.updates += 1;
        if self.updates.is_multiple_of(self.config.target_sync) {
            self.sync_target();
        }
        buffer.update_priorities(&sample.indices, &td)?;
        Ok(parts)
    }

    pub fn save(&self, path: &Path, seed: u64) -> Result<()> {
        let meta = AgentMeta {
            config: self.config.clone(),
            variant: self.variant,
            state_dim: self.state_dim(),
            actions: self.n_actions(),
        };
        checkpoint::save(path, "q-network", &self.params, seed, self.updates, serde_json::to_value(meta)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (manifest, store) = checkpoint::load(path)?;
        if manifest.kind != "q-network" {
            return Err(Error::Format(format!("expected a q-network checkpoint, found {}", manifest.kind)));
        }
        let meta: AgentMeta = serde_json::from_value(manifest.meta)?;
        let mut agent = Self::new(meta.config, meta.variant, meta.state_dim, meta.actions, manifest.seed)?;
        crate::error::check_len(agent.params.len(), store.len())?;
        agent.params.values = store.values;
        agent.target = agent.params.values.clone();
        agent.updates = manifest.step;
        Ok(agent)
    }
}
