use serde::{Deserialize, Serialize};

use super::acts::Intent;
use super::config::EnvConfig;

pub const TURN_BUCKETS: usize = 8;

/// Per-domain flags.
pub(crate) const DOMAIN_FLAGS: usize = 5;
const ACTIVE: usize = 0;
const NAME_INFORMED: usize = 1;
const OFFER_VALID: usize = 2;
const BOOK_OPEN: usize = 3;
const BOOKED: usize = 4;
/// Per informable slot: constrained (value or "don't care" known),
/// requested by the system, informed by the user this turn.
const INF_FLAGS: usize = 3;
/// Per requestable slot: open user request, informed by the system,
/// requested by the user this turn.
const REQ_FLAGS: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
struct DomainBlock {
    offset: usize,
    n_inf: usize,
    n_req: usize,
}

impl DomainBlock {
    fn inf(&self, slot: usize, flag: usize) -> usize {
        self.offset + DOMAIN_FLAGS + slot * INF_FLAGS + flag
    }

    fn req(&self, slot: usize, flag: usize) -> usize {
        self.offset + DOMAIN_FLAGS + self.n_inf * INF_FLAGS + slot * REQ_FLAGS + flag
    }
}

/// Bit positions of the binary dialog state for one configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateLayout {
    blocks: Vec<DomainBlock>,
    intents_offset: usize,
    turns_offset: usize,
    bucket_width: usize,
    len: usize,
}

impl StateLayout {
    pub fn new(config: &EnvConfig) -> Self {
        let mut offset = 0;
        let blocks = config
            .domains
            .iter()
            .map(|d| {
                let b = DomainBlock {
                    offset,
                    n_inf: d.informable_slots.len(),
                    n_req: d.requestable_slots.len(),
                };
                offset += DOMAIN_FLAGS + b.n_inf * INF_FLAGS + b.n_req * REQ_FLAGS;
                b
            })
            .collect();
        let intents_offset = offset;
        let turns_offset = intents_offset + Intent::ALL.len();
        Self {
            blocks,
            intents_offset,
            turns_offset,
            bucket_width: config.max_turns.div_ceil(TURN_BUCKETS),
            len: turns_offset + TURN_BUCKETS,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn n_domains(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_informable(&self, d: usize) -> usize {
        self.blocks[d].n_inf
    }

    pub fn n_requestable(&self, d: usize) -> usize {
        self.blocks[d].n_req
    }

    pub fn active(&self, d: usize) -> usize {
        self.blocks[d].offset + ACTIVE
    }
    pub fn name_informed(&self, d: usize) -> usize {
        self.blocks[d].offset + NAME_INFORMED
    }
    pub fn offer_valid(&self, d: usize) -> usize {
        self.blocks[d].offset + OFFER_VALID
    }
    pub fn book_open(&self, d: usize) -> usize {
        self.blocks[d].offset + BOOK_OPEN
    }
    pub fn booked(&self, d: usize) -> usize {
        self.blocks[d].offset + BOOKED
    }
    pub fn constrained(&self, d: usize, s: usize) -> usize {
        self.blocks[d].inf(s, 0)
    }
    pub fn system_requested(&self, d: usize, s: usize) -> usize {
        self.blocks[d].inf(s, 1)
    }
    pub fn user_informed_now(&self, d: usize, s: usize) -> usize {
        self.blocks[d].inf(s, 2)
    }
    pub fn user_requested(&self, d: usize, r: usize) -> usize {
        self.blocks[d].req(r, 0)
    }
    pub fn system_informed(&self, d: usize, r: usize) -> usize {
        self.blocks[d].req(r, 1)
    }
    pub fn user_requested_now(&self, d: usize, r: usize) -> usize {
        self.blocks[d].req(r, 2)
    }
    pub fn last_intent(&self, intent: Intent) -> usize {
        self.intents_offset + intent.index()
    }
    pub fn turn_bucket(&self, turn: usize) -> usize {
        self.turns_offset + (turn / self.bucket_width).min(TURN_BUCKETS - 1)
    }
}

/// Fixed-length binary dialog state.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DialogState {
    pub bits: Vec<u8>,
}

impl DialogState {
    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![0; len] }
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i] != 0
    }

    pub fn set(&mut self, i: usize, on: bool) {
        self.bits[i] = on as u8;
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn features(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| b as f64).collect()
    }
}
