//! Synthetic dialog corpora at three annotation strengths, plus the
//! out-of-domain configuration transform.

mod io;
mod ood;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{DialogEnv, DialogState, EnvConfig, LabelSet, RulePolicy};
use crate::seed::{self, stream};
use crate::{Error, Result};

pub use io::{read_corpus, read_header, write_corpus};
pub use ood::make_ood_config;

pub const CORPUS_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strength {
    Full,
    Reduced,
    Pairs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusHeader {
    pub format_version: u32,
    pub strength: Strength,
    pub config_hash: String,
    pub config: EnvConfig,
    pub n_dialogs: usize,
    pub noise: f64,
    pub seed: u64,
}

/// One system turn with its gold action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullLabelExample {
    pub dialog: usize,
    pub turn: usize,
    pub state: DialogState,
    pub action_index: usize,
    /// Last user utterance before the action.
    pub user_text: String,
    /// Verbalized gold action.
    pub agent_text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedLabelExample {
    pub dialog: usize,
    pub context_text: String,
    pub labels: LabelSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairLabel {
    Positive,
    Negative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtterancePair {
    pub dialog: usize,
    pub user_text: String,
    pub agent_text: String,
    pub label: PairLabel,
}

pub trait Example: Serialize + for<'de> Deserialize<'de> {
    const STRENGTH: Strength;
}

impl Example for FullLabelExample {
    const STRENGTH: Strength = Strength::Full;
}
impl Example for ReducedLabelExample {
    const STRENGTH: Strength = Strength::Reduced;
}
impl Example for UtterancePair {
    const STRENGTH: Strength = Strength::Pairs;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corpus<E> {
    pub header: CorpusHeader,
    pub examples: Vec<E>,
}

pub type FullCorpus = Corpus<FullLabelExample>;
pub type ReducedCorpus = Corpus<ReducedLabelExample>;
pub type PairCorpus = Corpus<UtterancePair>;

/// Rolls the rule policy against the simulator. With probability `noise` each
/// system action is swapped for a random action carrying the same reduced labels.
pub fn generate_corpus(config: &EnvConfig, n_dialogs: usize, noise: f64, seed: u64) -> Result<FullCorpus> {
    if n_dialogs == 0 {
        return Err(Error::usage("corpus needs at least one dialog"));
    }
    if !(0.0..1.0).contains(&noise) {
        return Err(Error::usage(format!("noise {noise} outside [0, 1)")));
    }
    let mut env = DialogEnv::new(config.clone())?;
    let rule = RulePolicy::new(&env);
    let space = env.action_space().clone();
    let mut by_labels: BTreeMap<LabelSet, Vec<usize>> = BTreeMap::new();
    for (i, l) in space.reduced_partition().iter().enumerate() {
        by_labels.entry(*l).or_default().push(i);
    }
    let mut rng = seed::rng(seed, stream::NOISE);
    let mut examples = Vec::new();
    for dialog in 0..n_dialogs {
        let goal_seed = seed::derive(seed::derive(seed, stream::CORPUS), dialog as u64);
        let mut state = env.reset(goal_seed).state;
        let mut turn = 0;
        while !env.is_done() {
            let mut action = rule.act(&state);
            if noise > 0.0 && rng.random::<f64>() < noise {
                let same = &by_labels[&space.labels_of(action)];
                action = *same.choose(&mut rng).expect("label group contains the rule action");
            }
            let user_text = env.user_text()?;
            let agent_text = env.system_text(&space.get(action)?.acts)?;
            examples.push(FullLabelExample { dialog, turn, state: state.clone(), action_index: action, user_text, agent_text });
            state = env.step(action)?.state;
            turn += 1;
        }
    }
    Ok(Corpus {
        header: CorpusHeader {
            format_version: CORPUS_FORMAT_VERSION,
            strength: Strength::Full,
            config_hash: config.hash(),
            config: config.clone(),
            n_dialogs,
            noise,
            seed,
        },
        examples,
    })
}

/// Maps every gold action to its reduced labels; the context is the last user utterance.
pub fn reduce_labels(corpus: &FullCorpus) -> Result<ReducedCorpus> {
    let space = crate::env::ActionSpace::new(&corpus.header.config);
    let examples = corpus
        .examples
        .iter()
        .map(|e| {
            Ok(ReducedLabelExample {
                dialog: e.dialog,
                context_text: e.user_text.clone(),
                labels: space.get(e.action_index)?.labels(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Corpus { header: CorpusHeader { strength: Strength::Reduced, ..corpus.header.clone() }, examples })
}

/// One positive pair per turn plus `negative_ratio` negatives whose agent text
/// was never observed as a response to that user text.
pub fn strip_labels(corpus: &FullCorpus, negative_ratio: usize, seed: u64) -> Result<PairCorpus> {
    if negative_ratio == 0 {
        return Err(Error::usage("negative_ratio must be at least 1"));
    }
    let responses: Vec<&str> = corpus
        .examples
        .iter()
        .map(|e| e.agent_text.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if responses.len() < 2 {
        return Err(Error::usage("need at least two distinct agent responses to build negatives"));
    }
    let mut observed: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for e in &corpus.examples {
        observed.entry(e.user_text.as_str()).or_default().insert(e.agent_text.as_str());
    }
    let mut rng = seed::rng(seed, stream::NEGATIVES);
    let mut examples = Vec::with_capacity(corpus.examples.len() * (1 + negative_ratio));
    for e in &corpus.examples {
        examples.push(UtterancePair {
            dialog: e.dialog,
            user_text: e.user_text.clone(),
            agent_text: e.agent_text.clone(),
            label: PairLabel::Positive,
        });
        let seen = &observed[e.user_text.as_str()];
        if seen.len() >= responses.len() {
            return Err(Error::usage(format!("every response was observed for {:?}", e.user_text)));
        }
        for _ in 0..negative_ratio {
            // Rejection sampling keeps the draw uniform over unobserved responses.
            let agent_text = loop {
                let r = *responses.choose(&mut rng).expect("non-empty");
                if !seen.contains(r) {
                    break r;
                }
            };
            examples.push(UtterancePair {
                dialog: e.dialog,
                user_text: e.user_text.clone(),
                agent_text: agent_text.to_string(),
                label: PairLabel::Negative,
            });
        }
    }
    Ok(Corpus { header: CorpusHeader { strength: Strength::Pairs, ..corpus.header.clone() }, examples })
}
