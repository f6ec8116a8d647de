use std::path::Path;

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::{f1_score, minibatch_train, split_holdout, Context, Demonstration, Expert, ExpertKind, FinetuneConfig, FinetuneData, TrainConfig, Vocab};
use crate::agent::Annotation;
use crate::corpus::ReducedCorpus;
use crate::env::{tokenize, DialogEnv, LabelSet, ReducedLabel};
use crate::nn::{checkpoint, loss::bce_with_logits, sigmoid, Dense, ParamStore, RecurrentEncoder};
use crate::seed::{self, stream, Rng};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RleConfig {
    pub embed_dim: usize,
    pub hidden: usize,
    pub input_dropout: f64,
    /// Sigmoid score a label must exceed to be predicted.
    pub threshold: f64,
    pub train: TrainConfig,
}

impl Default for RleConfig {
    fn default() -> Self {
        Self { embed_dim: 32, hidden: 32, input_dropout: 0.1, threshold: 0.5, train: TrainConfig::default() }
    }
}

/// Multi-label classifier from the last user utterance to {inform, request, other}.
#[derive(Clone, Debug)]
pub struct ReducedLabelExpert {
    config: RleConfig,
    vocab: Vocab,
    /// Labels carried by each action of the target environment.
    action_labels: Vec<LabelSet>,
    encoder: RecurrentEncoder,
    head: Dense,
    params: ParamStore,
}

#[derive(Serialize, Deserialize)]
struct RleMeta {
    config: RleConfig,
    vocab: Vocab,
    action_labels: Vec<LabelSet>,
}

type LabelledText = (Vec<usize>, [f64; 3]);

impl ReducedLabelExpert {
    pub fn new(vocab: Vocab, action_labels: Vec<LabelSet>, config: RleConfig, seed: u64) -> Self {
        let mut rng = seed::rng(seed, stream::EXPERT);
        let mut params = ParamStore::new();
        let encoder = RecurrentEncoder::new(
            &mut params,
            "rle",
            vocab.len(),
            config.embed_dim,
            config.hidden,
            config.input_dropout,
            &mut rng,
        );
        let head = Dense::new(&mut params, "rle.head", config.hidden, ReducedLabel::ALL.len(), true, &mut rng);
        Self { config, vocab, action_labels, encoder, head, params }
    }

    /// Trains on a reduced-label corpus for use in `env`; returns the expert and
    /// its micro-averaged label F1 on held-out dialogs.
    pub fn train(corpus: &ReducedCorpus, env: &DialogEnv, config: RleConfig, seed: u64) -> Result<(Self, f64)> {
        if corpus.examples.is_empty() {
            return Err(Error::usage("cannot train on an empty corpus"));
        }
        let env_tokens = env.verbalizer().token_set(env.action_space());
        let vocab = Vocab::new(
            corpus
                .examples
                .iter()
                .flat_map(|e| tokenize(&e.context_text))
                .chain(env_tokens.iter().map(String::as_str)),
        );
        let mut expert = Self::new(vocab, env.action_space().reduced_partition().to_vec(), config, seed);
        let (train, held) = split_holdout(&corpus.examples, |e| e.dialog, expert.config.train.holdout_every);
        let train = expert.encode_examples(train.iter().map(|e| (e.context_text.as_str(), e.labels)))?;
        let held = expert.encode_examples(held.iter().map(|e| (e.context_text.as_str(), e.labels)))?;
        let mut rng = seed::rng(seed, stream::DROPOUT);
        let tc = expert.config.train.clone();
        expert.fit(&train, tc.epochs, tc.batch_size, tc.learning_rate, &mut rng)?;
        let f1 = expert.label_f1(&held)?;
        Ok((expert, f1))
    }

    fn encode_examples<'a>(&self, items: impl Iterator<Item = (&'a str, LabelSet)>) -> Result<Vec<LabelledText>> {
        items
            .map(|(text, labels)| {
                let tokens = self.vocab.encode(text);
                if tokens.is_empty() {
                    return Err(Error::usage("empty utterance"));
                }
                Ok((tokens, labels.to_targets()))
            })
            .collect()
    }

    fn fit(&mut self, data: &[LabelledText], epochs: usize, batch: usize, lr: f64, rng: &mut Rng) -> Result<f64> {
        let (encoder, head) = (self.encoder.clone(), self.head.clone());
        minibatch_train(&mut self.params.values, data, epochs, batch, lr, rng, |p, (tokens, targets), g, rng| {
            let cache = encoder.encode_cached(p, tokens, Some(rng))?;
            let logits = head.forward_vec(p, &cache.output);
            let (loss, d) = bce_with_logits(&logits, targets);
            let mut dh = vec![0.0; cache.output.len()];
            head.backward(p, &cache.output, &d, g, Some(&mut dh));
            encoder.backward(p, &cache, &dh, g);
            Ok(loss)
        })
    }

    fn logits(&self, tokens: &[usize]) -> Result<Vec<f64>> {
        let h = self.encoder.encode(&self.params.values, tokens)?;
        Ok(self.head.forward_vec(&self.params.values, &h))
    }

    /// Sigmoid score per reduced label, in label order.
    pub fn scores(&self, text: &str) -> Result<[f64; 3]> {
        let tokens = self.vocab.encode(text);
        if tokens.is_empty() {
            return Err(Error::usage("empty utterance"));
        }
        let z = self.logits(&tokens)?;
        Ok([sigmoid(z[0]), sigmoid(z[1]), sigmoid(z[2])])
    }

    /// Labels scoring above the threshold, or the single best label if none does.
    pub fn labels_from_scores(&self, scores: &[f64; 3]) -> LabelSet {
        let set = LabelSet::from_labels(ReducedLabel::ALL.into_iter().filter(|l| scores[l.index()] > self.config.threshold));
        if set.is_empty() {
            let best = (0..3).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
            LabelSet::single(ReducedLabel::ALL[best])
        } else {
            set
        }
    }

    pub fn predict(&self, text: &str) -> Result<LabelSet> {
        Ok(self.labels_from_scores(&self.scores(text)?))
    }

    /// Environment actions carrying any of the given labels.
    pub fn actions_for(&self, labels: LabelSet) -> Vec<usize> {
        (0..self.action_labels.len()).filter(|&i| self.action_labels[i].intersects(labels)).collect()
    }

    pub fn admissible(&self, text: &str) -> Result<Vec<usize>> {
        Ok(self.actions_for(self.predict(text)?))
    }

    /// Micro-averaged F1 over the three labels.
    fn label_f1(&self, data: &[LabelledText]) -> Result<f64> {
        let mut pairs = Vec::with_capacity(data.len() * 3);
        for (tokens, targets) in data {
            let z = self.logits(tokens)?;
            let scores = [sigmoid(z[0]), sigmoid(z[1]), sigmoid(z[2])];
            let predicted = self.labels_from_scores(&scores).to_targets();
            pairs.extend((0..3).map(|i| (predicted[i] > 0.5, targets[i] > 0.5)));
        }
        Ok(f1_score(pairs))
    }

    /// Micro label F1 on arbitrary `(utterance, labels)` pairs.
    pub fn evaluate<'a>(&self, items: impl Iterator<Item = (&'a str, LabelSet)>) -> Result<f64> {
        let data = self.encode_examples(items)?;
        self.label_f1(&data)
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn save(&self, path: &Path, seed: u64) -> Result<()> {
        let meta = RleMeta { config: self.config.clone(), vocab: self.vocab.clone(), action_labels: self.action_labels.clone() };
        checkpoint::save(path, "rle", &self.params, seed, 0, serde_json::to_value(meta)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (manifest, store) = checkpoint::load(path)?;
        if manifest.kind != "rle" {
            return Err(Error::Format(format!("expected an rle checkpoint, found {}", manifest.kind)));
        }
        let meta: RleMeta = serde_json::from_value(manifest.meta)?;
        let mut expert = Self::new(meta.vocab, meta.action_labels, meta.config, manifest.seed);
        crate::error::check_len(expert.params.len(), store.len())?;
        expert.params.values = store.values;
        Ok(expert)
    }
}

impl Expert for ReducedLabelExpert {
    fn kind(&self) -> ExpertKind {
        ExpertKind::Rle
    }

    fn demonstrate(&self, ctx: &Context, rng: &mut Rng) -> Result<Demonstration> {
        let set = self.admissible(ctx.user_text)?;
        let action = match set.choose(rng) {
            Some(&a) => a,
            None => return Err(Error::usage("predicted labels match no action")),
        };
        Ok(Demonstration { action, annotation: Annotation::Set(set) })
    }

    fn finetune(&mut self, data: &FinetuneData, config: &FinetuneConfig, rng: &mut Rng) -> Result<Option<f64>> {
        let examples = self.encode_examples(
            data.accepted_turns().map(|t| (t.user_text.as_str(), self.action_labels[t.action])),
        )?;
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
