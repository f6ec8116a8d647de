use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Slots and value vocabulary of one dialog domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSchema {
    pub name: String,
    /// Slots the user constrains (and the system may ask about).
    pub informable_slots: Vec<String>,
    /// Slots the user may ask the system about.
    pub requestable_slots: Vec<String>,
    /// Value vocabulary per informable slot, aligned with `informable_slots`.
    pub slot_values: Vec<Vec<String>>,
    pub bookable: bool,
}

/// Which family of surface templates the verbalizers use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateStyle {
    #[default]
    Base,
    Alternate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub schema_version: u32,
    pub domains: Vec<DomainSchema>,
    pub db_entities_per_domain: usize,
    pub max_turns: usize,
    pub success_reward: f64,
    pub failure_reward: f64,
    pub step_penalty: f64,
    /// Consecutive unproductive system turns the user tolerates before giving up.
    /// Zero disables giving up early.
    pub user_patience: usize,
    pub templates: TemplateStyle,
    pub seed: u64,
}

fn slots(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn domain(name: &str, informable: &[(&str, &[&str])], requestable: &[&str], bookable: bool) -> DomainSchema {
    DomainSchema {
        name: name.to_string(),
        informable_slots: informable.iter().map(|(s, _)| s.to_string()).collect(),
        requestable_slots: slots(requestable),
        slot_values: informable.iter().map(|(_, v)| slots(v)).collect(),
        bookable,
    }
}

impl EnvConfig {
    /// Desk-scale environment: three domains with four informable and three
    /// requestable slots each.
    pub fn desk() -> Self {
        let towns: &[&str] = &["cambridge", "london", "ely", "norwich", "stevenage"];
        let domains = vec![
            domain(
                "hotel",
                &[
                    ("area", &["north", "south", "east", "west", "centre"]),
                    ("price", &["cheap", "moderate", "expensive"]),
                    ("stars", &["two", "three", "four", "five"]),
                    ("parking", &["yes", "no"]),
                ],
                &["phone", "address", "postcode"],
                true,
            ),
            domain(
                "attraction",
                &[
                    ("area", &["north", "south", "east", "west", "centre"]),
                    ("type", &["museum", "park", "theatre", "gallery", "church"]),
                    ("fee", &["free", "paid"]),
                    ("open", &["morning", "afternoon", "evening"]),
                ],
                &["phone", "address", "website"],
                false,
            ),
            domain(
                "train",
                &[
                    ("departure", towns),
                    ("destination", towns),
                    ("day", &["monday", "tuesday", "wednesday", "thursday", "friday"]),
                    ("leave", &["early", "midday", "late"]),
                ],
                &["duration", "fare", "trainid"],
                true,
            ),
        ];
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            domains,
            db_entities_per_domain: 20,
            max_turns: 40,
            success_reward: 80.0,
            failure_reward: -40.0,
            step_penalty: -1.0,
            user_patience: 4,
            templates: TemplateStyle::Base,
            seed: 0,
        }
    }

    /// Larger preset in the spirit of the original multi-domain benchmark:
    /// seven domains and a few hundred state bits and actions. The simulated
    /// user never gives up early, so failed dialogs run to `max_turns`.
    pub fn full_scale() -> Self {
        let mut cfg = Self::desk();
        let extra = [
            ("restaurant", ["food", "pricerange", "area", "seats", "cuisine"], ["phone", "address", "postcode", "reference"], true),
            ("taxi", ["leaveat", "arriveby", "origin", "goal", "size"], ["car", "phone", "plate", "colour"], true),
            ("hospital", ["department", "wing", "floor", "ward", "unit"], ["phone", "address", "postcode", "hours"], false),
            ("police", ["district", "branch", "desk", "shift", "office"], ["phone", "address", "postcode", "chief"], false),
        ];
        for (name, inf, req, bookable) in extra {
            cfg.domains.push(DomainSchema {
                name: name.to_string(),
                informable_slots: slots(&inf),
                requestable_slots: slots(&req),
                slot_values: inf
                    .iter()
                    .map(|s| (0..4).map(|k| format!("{s}{k}")).collect())
                    .collect(),
                bookable,
            });
        }
        cfg.max_turns = 40;
        cfg.success_reward = 80.0;
        cfg.failure_reward = -40.0;
        cfg.user_patience = cfg.max_turns;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported schema version {}",
                self.schema_version
            )));
        }
        if self.domains.is_empty() {
            return Err(Error::config("at least one domain is required"));
        }
        let mut names = BTreeSet::new();
        for d in &self.domains {
            if !names.insert(&d.name) {
                return Err(Error::config(format!("duplicate domain {}", d.name)));
            }
            if d.informable_slots.is_empty() || d.requestable_slots.is_empty() {
                return Err(Error::config(format!(
                    "domain {} needs informable and requestable slots",
                    d.name
                )));
            }
            let mut seen = BTreeSet::new();
            for s in d.informable_slots.iter().chain(&d.requestable_slots) {
                if !seen.insert(s) {
                    return Err(Error::config(format!("duplicate slot {s} in {}", d.name)));
                }
            }
            if d.slot_values.len() != d.informable_slots.len()
                || d.slot_values.iter().any(|v| v.is_empty())
            {
                return Err(Error::config(format!(
                    "domain {} needs a non-empty value list per informable slot",
                    d.name
                )));
            }
        }
        if self.db_entities_per_domain == 0 {
            return Err(Error::config("database must hold at least one entity per domain"));
        }
        if self.max_turns < 2 {
            return Err(Error::config("max_turns must be at least 2"));
        }
        if self.step_penalty >= 0.0 {
            return Err(Error::config("step_penalty must be negative"));
        }
        if self.success_reward <= self.failure_reward {
            return Err(Error::config("success_reward must exceed failure_reward"));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: EnvConfig = serde_json::from_slice(&fs::read(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    /// Best total reward a dialog can earn: immediate success on the first turn.
    pub fn max_dialog_reward(&self) -> f64 {
        self.success_reward + self.step_penalty
    }
}
