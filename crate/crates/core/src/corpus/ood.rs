use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::env::{EnvConfig, TemplateStyle};
use crate::seed::{self, stream};

/// Renames for the desk schema; anything else gets a generated pseudo-word.
const LEXICON: &[(&str, &str)] = &[
    ("hotel", "lodging"),
    ("attraction", "sight"),
    ("train", "rail"),
    ("area", "district"),
    ("price", "budget"),
    ("stars", "rating"),
    ("parking", "garage"),
    ("phone", "telephone"),
    ("address", "location"),
    ("postcode", "zipcode"),
    ("type", "category"),
    ("fee", "cost"),
    ("open", "schedule"),
    ("website", "homepage"),
    ("departure", "origin"),
    ("destination", "terminus"),
    ("day", "weekday"),
    ("leave", "departs"),
    ("duration", "traveltime"),
    ("fare", "ticket"),
    ("trainid", "reference"),
];

fn pseudo_word(rng: &mut impl Rng, taken: &mut BTreeSet<String>) -> String {
    const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
    const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
    loop {
        let syllables = rng.random_range(2..=3);
        let word: String = (0..syllables)
            .map(|_| format!("{}{}", ONSETS[rng.random_range(0..ONSETS.len())], VOWELS[rng.random_range(0..VOWELS.len())]))
            .collect();
        if taken.insert(word.clone()) {
            return word;
        }
    }
}

/// Out-of-domain variant of `base`: renamed and reordered domains and slots,
/// regenerated values and database, the alternate templates, and one
/// requestable slot dropped. Reduced labels keep their meaning.
pub fn make_ood_config(base: &EnvConfig, seed: u64) -> EnvConfig {
    let mut rng = seed::rng(seed, stream::OOD);
    let mut taken: BTreeSet<String> = LEXICON.iter().map(|(_, to)| to.to_string()).collect();
    let mut rename = |name: &str, rng: &mut crate::seed::Rng| -> String {
        LEXICON
            .iter()
            .find(|(from, _)| *from == name)
            .map(|(_, to)| to.to_string())
            .unwrap_or_else(|| pseudo_word(rng, &mut taken))
    };
    let mut cfg = base.clone();
    for d in &mut cfg.domains {
        d.name = rename(&d.name, &mut rng);
        let mut order: Vec<usize> = (0..d.informable_slots.len()).collect();
        order.shuffle(&mut rng);
        let slots: Vec<String> = order.iter().map(|&i| rename(&d.informable_slots[i], &mut rng)).collect();
        let values: Vec<Vec<String>> = order
            .iter()
            .map(|&i| (0..d.slot_values[i].len()).map(|_| rename("", &mut rng)).collect())
            .collect();
        d.informable_slots = slots;
        d.slot_values = values;
        d.requestable_slots.shuffle(&mut rng);
        d.requestable_slots = d.requestable_slots.iter().map(|s| rename(s, &mut rng)).collect();
    }
    cfg.domains.shuffle(&mut rng);
    let droppable: Vec<usize> = (0..cfg.domains.len()).filter(|&i| cfg.domains[i].requestable_slots.len() > 1).collect();
    if !droppable.is_empty() {
        let d = droppable[rng.random_range(0..droppable.len())];
        cfg.domains[d].requestable_slots.pop();
    }
    cfg.templates = TemplateStyle::Alternate;
    cfg.seed = seed::derive(seed, stream::OOD);
    cfg
}
