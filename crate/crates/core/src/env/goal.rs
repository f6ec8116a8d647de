use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::config::EnvConfig;
use crate::seed::{self, stream};

/// Entities per domain; each entity holds one value index per informable slot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Database {
    pub entities: Vec<Vec<Vec<usize>>>,
}

impl Database {
    pub fn generate(config: &EnvConfig) -> Self {
        let mut rng = seed::rng(config.seed, stream::DATABASE);
        let entities = config
            .domains
            .iter()
            .map(|d| {
                (0..config.db_entities_per_domain)
                    .map(|_| d.slot_values.iter().map(|v| rng.random_range(0..v.len())).collect())
                    .collect()
            })
            .collect();
        Self { entities }
    }

    /// First entity of `domain` consistent with every known constraint.
    /// `None` entries in `known` are unconstrained.
    pub fn first_match(&self, domain: usize, known: &[Option<usize>]) -> Option<usize> {
        self.entities[domain].iter().position(|e| {
            known.iter().zip(e).all(|(k, v)| k.is_none_or(|k| k == *v))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainGoal {
    pub domain: usize,
    /// (informable slot, value index), in the order the user reveals them.
    pub constraints: Vec<(usize, usize)>,
    /// Requestable slots, non-empty.
    pub requests: Vec<usize>,
    pub book: bool,
}

impl DomainGoal {
    pub fn constraint(&self, slot: usize) -> Option<usize> {
        self.constraints.iter().find(|(s, _)| *s == slot).map(|(_, v)| *v)
    }

    /// True if `entity` satisfies every constraint.
    pub fn accepts(&self, entity: &[usize]) -> bool {
        self.constraints.iter().all(|&(s, v)| entity[s] == v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserGoal {
    /// Goal domains in the order the user pursues them.
    pub domains: Vec<DomainGoal>,
}

impl UserGoal {
    /// Samples a goal deterministically from `goal_seed`. Constraints are copied
    /// from a database entity, so every goal has at least one matching entity.
    pub fn sample(config: &EnvConfig, db: &Database, goal_seed: u64) -> Self {
        let mut rng = seed::rng(seed::mix(config.seed ^ seed::mix(goal_seed)), stream::GOALS);
        let n_domains = config.domains.len();
        let roll: f64 = rng.random();
        let wanted = if roll < 0.5 {
            1
        } else if roll < 0.85 {
            2
        } else {
            3
        }
        .min(n_domains);
        let mut order: Vec<usize> = (0..n_domains).collect();
        order.shuffle(&mut rng);
        let domains = order[..wanted]
            .iter()
            .map(|&d| {
                let schema = &config.domains[d];
                let entity = db.entities[d].choose(&mut rng).expect("database is non-empty");
                let n_inf = schema.informable_slots.len();
                let n_cons = rng.random_range(2.min(n_inf)..=4.min(n_inf));
                let mut slots: Vec<usize> = (0..n_inf).collect();
                slots.shuffle(&mut rng);
                let constraints = slots[..n_cons].iter().map(|&s| (s, entity[s])).collect();
                let n_req_slots = schema.requestable_slots.len();
                let n_req = rng.random_range(1..=3.min(n_req_slots));
                let mut reqs: Vec<usize> = (0..n_req_slots).collect();
                reqs.shuffle(&mut rng);
                let mut requests = reqs[..n_req].to_vec();
                requests.sort_unstable();
                let book = schema.bookable && rng.random_bool(0.5);
                DomainGoal { domain: d, constraints, requests, book }
            })
            .collect();
        Self { domains }
    }

    pub fn domain(&self, d: usize) -> Option<&DomainGoal> {
        self.domains.iter().find(|g| g.domain == d)
    }

    pub fn total_requests(&self) -> usize {
        self.domains.iter().map(|g| g.requests.len()).sum()
    }
}
