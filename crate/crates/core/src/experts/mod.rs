//! Demonstrators: rule expert plus full-, reduced- and no-label experts.

mod fle;
mod nle;
mod rle;
mod rule;
mod vocab;

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::Annotation;
use crate::env::DialogState;
use crate::nn::Radam;
use crate::seed::Rng;
use crate::Result;

pub use fle::{FleConfig, FullLabelExpert};
pub use nle::{NleConfig, NoLabelExpert};
pub use rle::{ReducedLabelExpert, RleConfig};
pub use rule::RuleExpert;
pub use vocab::{Vocab, UNK};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpertKind {
    Rule,
    Fle,
    Rle,
    Nle,
}

/// What an expert may look at when demonstrating.
#[derive(Clone, Copy, Debug)]
pub struct Context<'a> {
    pub state: &'a DialogState,
    /// Last user utterance.
    pub user_text: &'a str,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Demonstration {
    pub action: usize,
    pub annotation: Annotation,
}

/// One system turn of a dialog collected while pre-filling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinetuneTurn {
    pub state: DialogState,
    pub action: usize,
    pub user_text: String,
    pub agent_text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinetuneDialog {
    pub reward: f64,
    pub turns: Vec<FinetuneTurn>,
}

/// Fine-tuning data gathered during pre-fill. `accepted` holds only dialogs
/// whose total reward exceeds the threshold; everything else goes to
/// `rejected`, which only the no-label expert uses (as negatives).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FinetuneData {
    pub threshold: f64,
    pub accepted: Vec<FinetuneDialog>,
    pub rejected: Vec<FinetuneDialog>,
}

impl FinetuneData {
    pub fn new(threshold: f64) -> Self {
        Self { threshold, accepted: Vec::new(), rejected: Vec::new() }
    }

    pub fn add(&mut self, dialog: FinetuneDialog) {
        if dialog.reward > self.threshold {
            self.accepted.push(dialog);
        } else {
            self.rejected.push(dialog);
        }
    }

    pub fn accepted_turns(&self) -> impl Iterator<Item = &FinetuneTurn> {
        self.accepted.iter().flat_map(|d| &d.turns)
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }
}

/// How a fine-tuning round runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinetuneConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self { epochs: 2, batch_size: 32, learning_rate: 0.001 }
    }
}

pub trait Expert {
    fn kind(&self) -> ExpertKind;

    /// Picks a demonstration action and the annotation its auxiliary loss needs.
    fn demonstrate(&self, ctx: &Context, rng: &mut Rng) -> Result<Demonstration>;

    /// Updates the expert on `data`; returns the mean loss of the last epoch, or
    /// `None` when there was nothing to train on.
    fn finetune(&mut self, data: &FinetuneData, config: &FinetuneConfig, rng: &mut Rng) -> Result<Option<f64>>;

    fn params(&self) -> &[f64];
}

/// Any of the three trainable experts, for code that picks the kind at run time.
pub enum LearnedExpert {
    Fle(FullLabelExpert),
    Rle(ReducedLabelExpert),
    Nle(NoLabelExpert),
}

impl LearnedExpert {
    /// Loads a learned expert checkpoint of any kind.
    pub fn load(path: &Path) -> Result<Self> {
        let manifest: crate::nn::checkpoint::Manifest = serde_json::from_slice(&std::fs::read(path)?)?;
        Ok(match manifest.kind.as_str() {
            "fle" => Self::Fle(FullLabelExpert::load(path)?),
            "rle" => Self::Rle(ReducedLabelExpert::load(path)?),
            "nle" => Self::Nle(NoLabelExpert::load(path)?),
            other => return Err(crate::Error::Format(format!("{other} is not an expert checkpoint"))),
        })
    }

    pub fn save(&self, path: &Path, seed: u64) -> Result<()> {
        match self {
            Self::Fle(e) => e.save(path, seed),
            Self::Rle(e) => e.save(path, seed),
            Self::Nle(e) => e.save(path, seed),
        }
    }

    fn inner(&self) -> &dyn Expert {
        match self {
            Self::Fle(e) => e,
            Self::Rle(e) => e,
            Self::Nle(e) => e,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Expert {
        match self {
            Self::Fle(e) => e,
            Self::Rle(e) => e,
            Self::Nle(e) => e,
        }
    }
}

impl Expert for LearnedExpert {
    fn kind(&self) -> ExpertKind {
        self.inner().kind()
    }

    fn demonstrate(&self, ctx: &Context, rng: &mut Rng) -> Result<Demonstration> {
        self.inner().demonstrate(ctx, rng)
    }

    fn finetune(&mut self, data: &FinetuneData, config: &FinetuneConfig, rng: &mut Rng) -> Result<Option<f64>> {
        self.inner_mut().finetune(data, config, rng)
    }

    fn params(&self) -> &[f64] {
        self.inner().params()
    }
}

/// Hex SHA-256 over the parameter bytes.
pub fn param_digest(params: &[f64]) -> String {
    let mut h = Sha256::new();
    for p in params {
        h.update(p.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Supervised training settings shared by the learned experts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Every n-th dialog is held out for evaluation.
    pub holdout_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 5, batch_size: 32, learning_rate: 0.01, holdout_every: 10 }
    }
}

/// Shuffled minibatch training. `step` adds one example's gradient into the
/// buffer and returns its loss; gradients are averaged over each minibatch.
/// Returns the mean loss of the last epoch.
pub(crate) fn minibatch_train<E>(
    params: &mut [f64],
    examples: &[E],
    epochs: usize,
    batch_size: usize,
    learning_rate: f64,
    rng: &mut Rng,
    mut step: impl FnMut(&[f64], &E, &mut [f64], &mut Rng) -> Result<f64>,
) -> Result<f64> {
    let mut opt = Radam::new(params.len(), learning_rate, 0.0);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut grads = vec![0.0; params.len()];
    let mut last = 0.0;
    for _ in 0..epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch_size.max(1)) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            for &i in chunk {
                total += step(params, &examples[i], &mut grads, rng)?;
            }
            let scale = 1.0 / chunk.len() as f64;
            grads.iter_mut().for_each(|g| *g *= scale);
            opt.update(params, &grads)?;
        }
        last = total / examples.len().max(1) as f64;
    }
    Ok(last)
}

/// Splits examples into (train, held-out) by dialog id; falls back to training
/// on everything when one side would be empty.
pub(crate) fn split_holdout<E: Clone>(examples: &[E], dialog: impl Fn(&E) -> usize, every: usize) -> (Vec<E>, Vec<E>) {
    let every = every.max(2);
    let (held, train): (Vec<E>, Vec<E>) = examples.iter().cloned().partition(|e| dialog(e).is_multiple_of(every));
    if train.is_empty() {
        (held.clone(), held)
    } else {
        (train, held)
    }
}

/// Binary F1 in [0, 1] from predicted/actual pairs.
pub fn f1_score(pairs: impl IntoIterator<Item = (bool, bool)>) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (pred, actual) in pairs {
        match (pred, actual) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}
