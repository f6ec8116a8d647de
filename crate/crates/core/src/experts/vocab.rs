use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::env::tokenize;
use crate::nn::PAD;

/// Id shared by every token outside the vocabulary.
pub const UNK: usize = 1;

/// Closed token vocabulary; id 0 is padding and id 1 is unknown.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    tokens: BTreeMap<String, usize>,
}

impl Vocab {
    pub fn new<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let sorted: BTreeSet<&str> = tokens.into_iter().collect();
        let tokens = sorted
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t.to_string(), i + 2))
            .collect();
        Self { tokens }
    }

    /// Number of ids including padding and unknown.
    pub fn len(&self) -> usize {
        self.tokens.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        debug_assert_ne!(PAD, UNK);
        self.tokens.get(token).copied().unwrap_or(UNK)
    }

    pub fn encode(&self, text: &str) -> Vec<usize> {
        tokenize(text).map(|t| self.id(t)).collect()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains_key(token)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_stable_and_unknowns_share_an_id() {
        let v = Vocab::new(["b", "a", "c", "a"]);
        assert_eq!(v.len(), 5);
        assert_eq!(v.encode("a b zzz c"), vec![2, 3, UNK, 4]);
        assert_eq!(v, Vocab::new(["c", "b", "a"]));
    }
}
