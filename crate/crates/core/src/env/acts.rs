use serde::{Deserialize, Serialize};

use super::config::EnvConfig;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Intent {
    Inform,
    Request,
    Book,
    Other,
}

impl Intent {
    pub const ALL: [Intent; 4] = [Intent::Inform, Intent::Request, Intent::Book, Intent::Other];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Slot argument of a system dialog act.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotRef {
    Informable(usize),
    Requestable(usize),
    /// The entity name: informing it is an offer.
    Name,
    Bye,
    Reqmore,
    None,
}

/// One (domain, intent, slot) system act. `domain` is `None` for general acts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DialogAct {
    pub domain: Option<usize>,
    pub intent: Intent,
    pub slot: SlotRef,
}

impl DialogAct {
    pub fn request(domain: usize, slot: usize) -> Self {
        Self { domain: Some(domain), intent: Intent::Request, slot: SlotRef::Informable(slot) }
    }

    pub fn offer(domain: usize) -> Self {
        Self { domain: Some(domain), intent: Intent::Inform, slot: SlotRef::Name }
    }

    pub fn inform(domain: usize, slot: usize) -> Self {
        Self { domain: Some(domain), intent: Intent::Inform, slot: SlotRef::Requestable(slot) }
    }

    pub fn book(domain: usize) -> Self {
        Self { domain: Some(domain), intent: Intent::Book, slot: SlotRef::None }
    }

    pub fn bye() -> Self {
        Self { domain: None, intent: Intent::Other, slot: SlotRef::Bye }
    }

    pub fn reqmore() -> Self {
        Self { domain: None, intent: Intent::Other, slot: SlotRef::Reqmore }
    }

    /// Checks that the act refers to existing domains and slots.
    pub fn validate(&self, config: &EnvConfig) -> Result<()> {
        let ok = match (self.domain, self.intent, self.slot) {
            (None, Intent::Other, SlotRef::Bye | SlotRef::Reqmore) => true,
            (Some(d), intent, slot) if d < config.domains.len() => {
                let schema = &config.domains[d];
                match (intent, slot) {
                    (Intent::Request, SlotRef::Informable(s)) => s < schema.informable_slots.len(),
                    (Intent::Inform, SlotRef::Name) => true,
                    (Intent::Inform, SlotRef::Requestable(s)) => s < schema.requestable_slots.len(),
                    (Intent::Book, SlotRef::None) => schema.bookable,
                    _ => false,
                }
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::usage(format!("act {self:?} does not belong to the configured schemas")))
        }
    }
}

/// Dialog acts produced by the simulated user.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "act", rename_all = "lowercase")]
pub enum UserAct {
    /// Constraint on an informable slot; `value: None` means "don't care".
    Inform { domain: usize, slot: usize, value: Option<usize> },
    Request { domain: usize, slot: usize },
    Book { domain: usize },
    Bye,
}

/// Coarse action annotation shared across datasets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReducedLabel {
    Inform,
    Request,
    Other,
}

impl ReducedLabel {
    pub const ALL: [ReducedLabel; 3] = [ReducedLabel::Inform, ReducedLabel::Request, ReducedLabel::Other];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn of(intent: Intent) -> Self {
        match intent {
            Intent::Inform => ReducedLabel::Inform,
            Intent::Request => ReducedLabel::Request,
            Intent::Book | Intent::Other => ReducedLabel::Other,
        }
    }
}

/// Set of reduced labels, stored as a bitmask indexed by [`ReducedLabel::index`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSet(u8);

impl LabelSet {
    pub const EMPTY: LabelSet = LabelSet(0);

    pub fn single(label: ReducedLabel) -> Self {
        LabelSet(1 << label.index())
    }

    pub fn from_labels(labels: impl IntoIterator<Item = ReducedLabel>) -> Self {
        labels.into_iter().fold(Self::EMPTY, |s, l| s.with(l))
    }

    pub fn with(self, label: ReducedLabel) -> Self {
        LabelSet(self.0 | 1 << label.index())
    }

    pub fn contains(self, label: ReducedLabel) -> bool {
        self.0 & (1 << label.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn intersects(self, other: LabelSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn labels(self) -> impl Iterator<Item = ReducedLabel> {
        ReducedLabel::ALL.into_iter().filter(move |l| self.contains(*l))
    }

    /// Multi-hot target vector in label order.
    pub fn to_targets(self) -> [f64; 3] {
        ReducedLabel::ALL.map(|l| if self.contains(l) { 1.0 } else { 0.0 })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeAction {
    pub index: usize,
    pub acts: Vec<DialogAct>,
}

impl CompositeAction {
    pub fn labels(&self) -> LabelSet {
        LabelSet::from_labels(self.acts.iter().map(|a| ReducedLabel::of(a.intent)))
    }
}

/// Fixed, ordered set of composite system actions for a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSpace {
    actions: Vec<CompositeAction>,
    labels: Vec<LabelSet>,
}

impl ActionSpace {
    /// Per domain: single requests, requests for consecutive slot pairs, a bare
    /// offer, an offer combined with a request for the first slot, every
    /// non-empty combination of requestable informs (capped at three slots), and
    /// a booking for bookable domains. Then the general `bye` and `reqmore`.
    pub fn new(config: &EnvConfig) -> Self {
        let mut lists: Vec<Vec<DialogAct>> = Vec::new();
        for (d, schema) in config.domains.iter().enumerate() {
            let n_inf = schema.informable_slots.len();
            let n_req = schema.requestable_slots.len();
            for s in 0..n_inf {
                lists.push(vec![DialogAct::request(d, s)]);
            }
            for s in (0..n_inf.saturating_sub(1)).step_by(2) {
                lists.push(vec![DialogAct::request(d, s), DialogAct::request(d, s + 1)]);
            }
            lists.push(vec![DialogAct::offer(d)]);
            lists.push(vec![DialogAct::offer(d), DialogAct::request(d, 0)]);
            let subset_bits = n_req.min(3);
            for mask in 1u32..(1 << subset_bits) {
                lists.push((0..subset_bits).filter(|r| mask & (1 << r) != 0).map(|r| DialogAct::inform(d, r)).collect());
            }
            for r in subset_bits..n_req {
                lists.push(vec![DialogAct::inform(d, r)]);
            }
            if schema.bookable {
                lists.push(vec![DialogAct::book(d)]);
            }
        }
        lists.push(vec![DialogAct::bye()]);
        lists.push(vec![DialogAct::reqmore()]);
        let actions: Vec<CompositeAction> = lists
            .into_iter()
            .enumerate()
            .map(|(index, acts)| CompositeAction { index, acts })
            .collect();
        let labels = actions.iter().map(CompositeAction::labels).collect();
        Self { actions, labels }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<&CompositeAction> {
        self.actions
            .get(index)
            .ok_or_else(|| Error::usage(format!("action {index} outside action space of {}", self.len())))
    }

    pub fn actions(&self) -> &[CompositeAction] {
        &self.actions
    }

    /// Reduced labels carried by each action, aligned with the action indices.
    pub fn reduced_partition(&self) -> &[LabelSet] {
        &self.labels
    }

    pub fn labels_of(&self, index: usize) -> LabelSet {
        self.labels[index]
    }

    /// Actions carrying at least one label of `set`.
    pub fn actions_with(&self, set: LabelSet) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i].intersects(set)).collect()
    }

    /// Index of the action with exactly these acts.
    pub fn find(&self, acts: &[DialogAct]) -> Option<usize> {
        self.actions.iter().position(|a| a.acts == acts)
    }
}
