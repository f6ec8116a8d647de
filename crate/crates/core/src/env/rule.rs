use super::acts::{ActionSpace, DialogAct, Intent, SlotRef};
use super::simulator::DialogEnv;
use super::state::{DialogState, StateLayout};

/// Hand-written dialog policy over the binary state.
///
/// For the first active domain that still needs work: ask for unknown
/// constraints, then offer an entity, then answer open requests, then book.
/// Stateless given the dialog state.
#[derive(Clone, Debug)]
pub struct RulePolicy {
    layout: StateLayout,
    requests: Vec<Vec<(usize, Vec<usize>)>>,
    informs: Vec<Vec<(usize, Vec<usize>)>>,
    offer: Vec<usize>,
    book: Vec<Option<usize>>,
    reqmore: usize,
}

impl RulePolicy {
    pub fn new(env: &DialogEnv) -> Self {
        Self::from_parts(env.layout().clone(), env.action_space())
    }

    pub fn from_parts(layout: StateLayout, actions: &ActionSpace) -> Self {
        let n = layout.n_domains();
        let mut requests = vec![Vec::new(); n];
        let mut informs = vec![Vec::new(); n];
        let mut offer = vec![usize::MAX; n];
        let mut book = vec![None; n];
        let mut reqmore = 0;
        for a in actions.actions() {
            let first = a.acts[0];
            let all = |intent: Intent| a.acts.iter().all(|x| x.intent == intent && x.domain == first.domain);
            let slots = |a: &[DialogAct]| -> Vec<usize> {
                a.iter()
                    .filter_map(|x| match x.slot {
                        SlotRef::Informable(s) | SlotRef::Requestable(s) => Some(s),
                        _ => None,
                    })
                    .collect()
            };
            match (first.domain, first.slot) {
                (None, SlotRef::Reqmore) => reqmore = a.index,
                (Some(d), _) if all(Intent::Request) => requests[d].push((a.index, slots(&a.acts))),
                (Some(d), SlotRef::Name) if a.acts.len() == 1 => offer[d] = a.index,
                (Some(d), SlotRef::Requestable(_)) if all(Intent::Inform) => informs[d].push((a.index, slots(&a.acts))),
                (Some(d), SlotRef::None) if first.intent == Intent::Book => book[d] = Some(a.index),
                _ => {}
            }
        }
        Self { layout, requests, informs, offer, book, reqmore }
    }

    /// Candidate covering the most wanted slots without touching unwanted ones.
    fn best_cover(candidates: &[(usize, Vec<usize>)], wanted: &[bool]) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for (index, slots) in candidates {
            if slots.iter().all(|&s| wanted[s]) && best.is_none_or(|(_, n)| slots.len() > n) {
                best = Some((*index, slots.len()));
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn act(&self, state: &DialogState) -> usize {
        let l = &self.layout;
        for d in 0..l.n_domains() {
            if !state.get(l.active(d)) {
                continue;
            }
            let unknown: Vec<bool> = (0..l.n_informable(d)).map(|s| !state.get(l.constrained(d, s))).collect();
            if unknown.iter().any(|&u| u) {
                if let Some(a) = Self::best_cover(&self.requests[d], &unknown) {
                    return a;
                }
            }
            if !state.get(l.offer_valid(d)) {
                return self.offer[d];
            }
            let open: Vec<bool> = (0..l.n_requestable(d)).map(|r| state.get(l.user_requested(d, r))).collect();
            if open.iter().any(|&o| o) {
                if let Some(a) = Self::best_cover(&self.informs[d], &open) {
                    return a;
                }
            }
            if state.get(l.book_open(d)) && !state.get(l.booked(d)) {
                if let Some(a) = self.book[d] {
                    return a;
                }
            }
        }
        self.reqmore
    }
}
