use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{f1_score, minibatch_train, split_holdout, Context, Demonstration, Expert, ExpertKind, FinetuneConfig, FinetuneData, TrainConfig, Vocab};
use crate::agent::{argmax, Annotation};
use crate::corpus::{PairCorpus, PairLabel};
use crate::env::{tokenize, DialogEnv};
use crate::nn::{checkpoint, loss::bce_with_logits, sigmoid, Activation, Embedding, FeedForwardNet, MeanEmbedder, ParamStore};
use crate::seed::{self, stream, Rng};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NleConfig {
    pub embed_dim: usize,
    /// SELU hidden layers on top of the concatenated sentence pair.
    pub hidden: Vec<usize>,
    /// Score an action must exceed to be admissible.
    pub rho: f64,
    pub train: TrainConfig,
}

impl Default for NleConfig {
    fn default() -> Self {
        Self { embed_dim: 64, hidden: vec![64, 32, 16], rho: 0.9, train: TrainConfig::default() }
    }
}

/// Scores how well a system response follows a user utterance.
#[derive(Clone, Debug)]
pub struct NoLabelExpert {
    config: NleConfig,
    vocab: Vocab,
    /// Token ids of every target-environment action's verbalization.
    action_tokens: Vec<Vec<usize>>,
    embedder: MeanEmbedder,
    net: FeedForwardNet,
    params: ParamStore,
}

#[derive(Serialize, Deserialize)]
struct NleMeta {
    config: NleConfig,
    vocab: Vocab,
    action_tokens: Vec<Vec<usize>>,
}

/// (user tokens, agent tokens, target in {0, 1})
type Pair = (Vec<usize>, Vec<usize>, f64);

impl NoLabelExpert {
    pub fn new(vocab: Vocab, action_tokens: Vec<Vec<usize>>, config: NleConfig, seed: u64) -> Self {
        let mut rng = seed::rng(seed, stream::EXPERT);
        let mut params = ParamStore::new();
        let embedder = MeanEmbedder::new(Embedding::new(&mut params, "nle.emb", vocab.len(), config.embed_dim, &mut rng));
        let mut sizes = vec![2 * config.embed_dim];
        sizes.extend(&config.hidden);
        sizes.push(1);
        let net = FeedForwardNet::new(&mut params, "nle.head", &sizes, Activation::Selu, 0.0, &mut rng);
        Self { config, vocab, action_tokens, embedder, net, params }
    }

    /// Trains on utterance pairs for use in `env`; returns the expert and its
    /// pair-classification F1 on held-out dialogs.
    pub fn train(corpus: &PairCorpus, env: &DialogEnv, config: NleConfig, seed: u64) -> Result<(Self, f64)> {
        if corpus.examples.is_empty() {
            return Err(Error::usage("cannot train on an empty corpus"));
        }
        let actions = env.action_space();
        let env_tokens = env.verbalizer().token_set(actions);
        let vocab = Vocab::new(
            corpus
                .examples
                .iter()
                .flat_map(|e| tokenize(&e.user_text).chain(tokenize(&e.agent_text)))
                .chain(env_tokens.iter().map(String::as_str)),
        );
        let action_tokens = actions
            .actions()
            .iter()
            .map(|a| env.system_text(&a.acts).map(|t| vocab.encode(&t)))
            .collect::<Result<Vec<_>>>()?;
        let mut expert = Self::new(vocab, action_tokens, config, seed);
        let (train, held) = split_holdout(&corpus.examples, |e| e.dialog, expert.config.train.holdout_every);
        let encode = |e: &crate::corpus::UtterancePair| -> Pair {
            let y = if e.label == PairLabel::Positive { 1.0 } else { 0.0 };
            (expert.vocab.encode(&e.user_text), expert.vocab.encode(&e.agent_text), y)
        };
        let train: Vec<Pair> = train.iter().map(encode).collect();
        let held: Vec<Pair> = held.iter().map(encode).collect();
        let mut rng = seed::rng(seed, stream::DROPOUT);
        let tc = expert.config.train.clone();
        expert.fit(&train, tc.epochs, tc.batch_size, tc.learning_rate, &mut rng)?;
        let f1 = expert.pair_f1(&held);
        Ok((expert, f1))
    }

    fn fit(&mut self, data: &[Pair], epochs: usize, batch: usize, lr: f64, rng: &mut Rng) -> Result<f64> {
        let (embedder, net) = (self.embedder.clone(), self.net.clone());
        let dim = embedder.dim();
        minibatch_train(&mut self.params.values, data, epochs, batch, lr, rng, |p, (u, a, y), g, _| {
            let mut x = embedder.encode(p, u);
            x.extend(embedder.encode(p, a));
            let cache = net.forward_cached::<Rng>(p, &x, None);
            let (loss, d) = bce_with_logits(&cache.output, &[*y]);
            let dx = net.backward(p, &cache, &d, g);
            embedder.backward(g, u, &dx[..dim]);
            embedder.backward(g, a, &dx[dim..]);
            Ok(loss)
        })
    }

    fn score_tokens(&self, user: &[f64], agent: &[usize]) -> f64 {
        let mut x = user.to_vec();
        x.extend(self.embedder.encode(&self.params.values, agent));
        sigmoid(self.net.forward(&self.params.values, &x)[0])
    }

    /// Score of one (user, system) sentence pair.
    pub fn score(&self, user_text: &str, agent_text: &str) -> f64 {
        let u = self.embedder.encode(&self.params.values, &self.vocab.encode(user_text));
        self.score_tokens(&u, &self.vocab.encode(agent_text))
    }

    /// Score of every environment action's verbalization against `user_text`.
    pub fn action_scores(&self, user_text: &str) -> Vec<f64> {
        let u = self.embedder.encode(&self.params.values, &self.vocab.encode(user_text));
        self.action_tokens.iter().map(|a| self.score_tokens(&u, a)).collect()
    }

    /// Actions scoring above `rho`.
    pub fn admissible_from_scores(&self, scores: &[f64]) -> Vec<usize> {
        (0..scores.len()).filter(|&i| scores[i] > self.config.rho).collect()
    }

    pub fn admissible(&self, user_text: &str) -> Vec<usize> {
        self.admissible_from_scores(&self.action_scores(user_text))
    }

    fn pair_f1(&self, data: &[Pair]) -> f64 {
        f1_score(data.iter().map(|(u, a, y)| {
            let ue = self.embedder.encode(&self.params.values, u);
            (self.score_tokens(&ue, a) > 0.5, *y > 0.5)
        }))
    }

    /// Pair-classification F1 at a 0.5 decision threshold.
    pub fn evaluate<'a>(&self, items: impl Iterator<Item = (&'a str, &'a str, bool)>) -> f64 {
        f1_score(items.map(|(u, a, y)| (self.score(u, a) > 0.5, y)))
    }

    pub fn rho(&self) -> f64 {
        self.config.rho
    }

    pub fn save(&self, path: &Path, seed: u64) -> Result<()> {
        let meta = NleMeta { config: self.config.clone(), vocab: self.vocab.clone(), action_tokens: self.action_tokens.clone() };
        checkpoint::save(path, "nle", &self.params, seed, 0, serde_json::to_value(meta)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (manifest, store) = checkpoint::load(path)?;
        if manifest.kind != "nle" {
            return Err(Error::Format(format!("expected an nle checkpoint, found {}", manifest.kind)));
        }
        let meta: NleMeta = serde_json::from_value(manifest.meta)?;
        let mut expert = Self::new(meta.vocab, meta.action_tokens, meta.config, manifest.seed);
        crate::error::check_len(expert.params.len(), store.len())?;
        expert.params.values = store.values;
        Ok(expert)
    }
}

impl Expert for NoLabelExpert {
    fn kind(&self) -> ExpertKind {
        ExpertKind::Nle
    }

    fn demonstrate(&self, ctx: &Context, rng: &mut Rng) -> Result<Demonstration> {
        let scores = self.action_scores(ctx.user_text);
        let set = self.admissible_from_scores(&scores);
        let action = match set.choose(rng) {
            Some(&a) => a,
            None => argmax(&scores),
        };
        Ok(Demonstration { action, annotation: Annotation::Set(set) })
    }

    /// Positives are turns of dialogs with reward at or above the threshold.
    /// Negatives are all turns of the other dialogs plus one random other
    /// response per positive.
    fn finetune(&mut self, data: &FinetuneData, config: &FinetuneConfig, rng: &mut Rng) -> Result<Option<f64>> {
        let mut positives = Vec::new();
        let mut negatives = Vec::new();
        for dialog in data.accepted.iter().chain(&data.rejected) {
            let good = dialog.reward >= data.threshold;
            for t in &dialog.turns {
                let pair = (self.vocab.encode(&t.user_text), self.vocab.encode(&t.agent_text), if good { 1.0 } else { 0.0 });
                if good {
                    positives.push(pair);
                } else {
                    negatives.push(pair);
                }
            }
        }
        if positives.is_empty() {
            log::warn!("fine-tuning skipped: no dialog reached the reward threshold yet");
            return Ok(None);
        }
        if self.action_tokens.len() > 1 {
            for (u, a, _) in &positives {
                let other = loop {
                    let c = &self.action_tokens[rng.random_range(0..self.action_tokens.len())];
                    if c != a {
                        break c.clone();
                    }
                };
                negatives.push((u.clone(), other, 0.0));
            }
        }
        positives.extend(negatives);
        self.fit(&positives, config.epochs, config.batch_size, config.learning_rate, rng).map(Some)
    }

    fn params(&self) -> &[f64] {
        &self.params.values
    }
}
