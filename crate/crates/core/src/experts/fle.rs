use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{minibatch_train, split_holdout, Context, Demonstration, Expert, ExpertKind, FinetuneConfig, FinetuneData, TrainConfig};
use crate::agent::{argmax, Annotation};
use crate::corpus::FullCorpus;
use crate::env::{ActionSpace, StateLayout};
use crate::nn::{checkpoint, loss::softmax_cross_entropy, softmax, Activation, FeedForwardNet, ParamStore};
use crate::seed::{self, stream, Rng};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FleConfig {
    pub hidden: usize,
    pub dropout: f64,
    pub train: TrainConfig,
}

impl Default for FleConfig {
    fn default() -> Self {
        Self { hidden: 150, dropout: 0.1, train: TrainConfig::default() }
    }
}

/// State → next-action classifier trained on fully labelled dialogs.
#[derive(Clone, Debug)]
pub struct FullLabelExpert {
    config: FleConfig,
    net: FeedForwardNet,
    params: ParamStore,
}

#[derive(Serialize, Deserialize)]
struct FleMeta {
    config: FleConfig,
    state_dim: usize,
    n_actions: usize,
}

impl FullLabelExpert {
    pub fn new(state_dim: usize, n_actions: usize, config: FleConfig, seed: u64) -> Self {
        let mut rng = seed::rng(seed, stream::EXPERT);
        let mut params = ParamStore::new();
        let net = FeedForwardNet::new(
            &mut params,
            "fle",
            &[state_dim, config.hidden, n_actions],
            Activation::Relu,
            config.dropout,
            &mut rng,
        );
        Self { config, net, params }
    }

    /// Trains on every dialog except the held-out ones and returns the expert
    /// with its held-out accuracy.
    pub fn train(
        corpus: &FullCorpus,
        state_dim: usize,
        n_actions: usize,
        config: FleConfig,
        seed: u64,
    ) -> Result<(Self, f64)> {
        let corpus_actions = ActionSpace::new(&corpus.header.config).len();
        let corpus_dim = StateLayout::new(&corpus.header.config).len();
        if corpus_actions != n_actions || corpus_dim != state_dim {
            return Err(Error::usage(format!(
                "corpus has {corpus_actions} actions and {corpus_dim} state bits, environment has {n_actions} and {state_dim}"
            )));
        }
        if corpus.examples.is_empty() {
            return Err(Error::usage("cannot train on an empty corpus"));
        }
        let pairs: Vec<(Vec<f64>, usize, usize)> =
            corpus.examples.iter().map(|e| (e.state.features(), e.action_index, e.dialog)).collect();
        let (train, held) = split_holdout(&pairs, |p| p.2, config.train.holdout_every);
        let train: Vec<(Vec<f64>, usize)> = train.into_iter().map(|(s, a, _)| (s, a)).collect();
        let held: Vec<(Vec<f64>, usize)> = held.into_iter().map(|(s, a, _)| (s, a)).collect();
        let mut expert = Self::new(state_dim, n_actions, config, seed);
        let mut rng = seed::rng(seed, stream::DROPOUT);
        let tc = expert.config.train.clone();
        expert.fit(&train, tc.epochs, tc.batch_size, tc.learning_rate, &mut rng)?;
        let accuracy = expert.accuracy(&held);
        Ok((expert, accuracy))
    }

    fn fit(&mut self, data: &[(Vec<f64>, usize)], epochs: usize, batch: usize, lr: f64, rng: &mut Rng) -> Result<f64> {
        let net = self.net.clone();
        minibatch_train(&mut self.params.values, data, epochs, batch, lr, rng, |p, (x, a), g, rng| {
            let cache = net.forward_cached(p, x, Some(rng));
            let (loss, d) = softmax_cross_entropy(&cache.output, *a);
            net.backward(p, &cache, &d, g);
            Ok(loss)
        })
    }

    pub fn probabilities(&self, state: &[f64]) -> Vec<f64> {
        softmax(&self.net.forward(&self.params.values, state))
    }

    pub fn predict(&self, state: &[f64]) -> usize {
        argmax(&self.net.forward(&self.params.values, state))
    }

    pub fn accuracy(&self, data: &[(Vec<f64>, usize)]) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        data.iter().filter(|(x, a)| self.predict(x) == *a).count() as f64 / data.len() as f64
    }

    /// Mean cross-entropy without dropout.
    pub fn loss(&self, data: &[(Vec<f64>, usize)]) -> f64 {
        let total: f64 = data
            .iter()
            .map(|(x, a)| softmax_cross_entropy(&self.net.forward(&self.params.values, x), *a).0)
            .sum();
        total / data.len().max(1) as f64
    }

    pub fn n_actions(&self) -> usize {
        self.net.output_dim()
    }

    pub fn save(&self, path: &Path, seed: u64) -> Result<()> {
        let meta = FleMeta { config: self.config.clone(), state_dim: self.net.input_dim(), n_actions: self.n_actions() };
        checkpoint::save(path, "fle", &self.params, seed, 0, serde_json::to_value(meta)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (manifest, store) = checkpoint::load(path)?;
        if manifest.kind != "fle" {
            return Err(Error::Format(format!("expected an fle checkpoint, found {}", manifest.kind)));
        }
        let meta: FleMeta = serde_json::from_value(manifest.meta)?;
        let mut expert = Self::new(meta.state_dim, meta.n_actions, meta.config, manifest.seed);
        crate::error::check_len(expert.params.len(), store.len())?;
        expert.params.values = store.values;
        Ok(expert)
    }
}

/// Draws an index from a probability vector.
pub(crate) fn sample_index(probs: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

impl Expert for FullLabelExpert {
    fn kind(&self) -> ExpertKind {
        ExpertKind::Fle
    }

    fn demonstrate(&self, ctx: &Context, rng: &mut Rng) -> Result<Demonstration> {
        let action = sample_index(&self.probabilities(&ctx.state.features()), rng);
        Ok(Demonstration { action, annotation: Annotation::Action(action) })
    }

    fn finetune(&mut self, data: &FinetuneData, config: &FinetuneConfig, rng: &mut Rng) -> Result<Option<f64>> {
        let examples: Vec<(Vec<f64>, usize)> = data.accepted_turns().map(|t| (t.state.features(), t.action)).collect();
        if examples.is_empty() {
            log::warn!("fine-tuning skipped: no dialog above the reward threshold yet");
            return Ok(None);
        }
        self.fit(&examples, config.epochs, config.batch_size, config.learning_rate, rng).map(Some)
    }

    fn params(&self) -> &[f64] {
        &self.params.values
    }
}
