use std::collections::BTreeSet;

use super::acts::{ActionSpace, DialogAct, Intent, SlotRef, UserAct};
use super::config::{EnvConfig, TemplateStyle};
use crate::{Error, Result};

const SYSTEM_FILLER: &str = "sorry i did not catch that";
const USER_FILLER: &str = "hmm let me think";

/// Deterministic template renderer for system and user acts.
#[derive(Clone, Debug)]
pub struct Verbalizer {
    config: EnvConfig,
}

impl Verbalizer {
    pub fn new(config: &EnvConfig) -> Self {
        Self { config: config.clone() }
    }

    pub fn style(&self) -> TemplateStyle {
        self.config.templates
    }

    fn joiner(&self) -> &'static str {
        match self.style() {
            TemplateStyle::Base => " and ",
            TemplateStyle::Alternate => " also ",
        }
    }

    fn system_fragment(&self, act: &DialogAct) -> Result<String> {
        act.validate(&self.config)?;
        let dom = |d: Option<usize>| &self.config.domains[d.unwrap_or(0)];
        let alt = self.style() == TemplateStyle::Alternate;
        let text = match (act.intent, act.slot) {
            (Intent::Request, SlotRef::Informable(s)) => {
                let d = dom(act.domain);
                let slot = &d.informable_slots[s];
                if alt {
                    format!("do you prefer a particular {slot}")
                } else {
                    format!("which {slot} would you like for the {}", d.name)
                }
            }
            (Intent::Inform, SlotRef::Name) => {
                let d = dom(act.domain);
                if alt {
                    format!("how about this {}", d.name)
                } else {
                    format!("i found a {} that matches", d.name)
                }
            }
            (Intent::Inform, SlotRef::Requestable(r)) => {
                let d = dom(act.domain);
                let slot = &d.requestable_slots[r];
                if alt {
                    format!("its {slot} is on record")
                } else {
                    format!("the {slot} of the {} is available", d.name)
                }
            }
            (Intent::Book, _) => {
                let d = dom(act.domain);
                if alt {
                    format!("reservation confirmed for {}", d.name)
                } else {
                    format!("your {} is booked", d.name)
                }
            }
            (_, SlotRef::Bye) => if alt { "farewell" } else { "goodbye have a nice day" }.to_string(),
            (_, SlotRef::Reqmore) => if alt { "need more help" } else { "can i help with anything else" }.to_string(),
            _ => return Err(Error::usage(format!("no template for {act:?}"))),
        };
        Ok(text)
    }

    /// Renders a (possibly composite) system action.
    pub fn system_text(&self, acts: &[DialogAct]) -> Result<String> {
        if acts.is_empty() {
            return Ok(SYSTEM_FILLER.to_string());
        }
        let parts = acts.iter().map(|a| self.system_fragment(a)).collect::<Result<Vec<_>>>()?;
        Ok(parts.join(self.joiner()))
    }

    fn user_fragment(&self, act: &UserAct) -> Result<String> {
        let alt = self.style() == TemplateStyle::Alternate;
        let domain = |d: usize| {
            self.config
                .domains
                .get(d)
                .ok_or_else(|| Error::usage(format!("unknown domain {d} in {act:?}")))
        };
        let text = match *act {
            UserAct::Inform { domain: d, slot, value } => {
                let d = domain(d)?;
                let name = d
                    .informable_slots
                    .get(slot)
                    .ok_or_else(|| Error::usage(format!("unknown slot in {act:?}")))?;
                match value {
                    Some(v) => {
                        let value = d.slot_values[slot]
                            .get(v)
                            .ok_or_else(|| Error::usage(format!("unknown value in {act:?}")))?;
                        if alt {
                            format!("looking for some {} where {name} equals {value}", d.name)
                        } else {
                            format!("i need a {} with {name} {value}", d.name)
                        }
                    }
                    None if alt => format!("{name} does not matter"),
                    None => format!("any {name} is fine"),
                }
            }
            UserAct::Request { domain: d, slot } => {
                let d = domain(d)?;
                let name = d
                    .requestable_slots
                    .get(slot)
                    .ok_or_else(|| Error::usage(format!("unknown slot in {act:?}")))?;
                if alt {
                    format!("tell me its {name}")
                } else {
                    format!("what is the {name} of the {}", d.name)
                }
            }
            UserAct::Book { domain: d } => {
                let d = domain(d)?;
                if alt {
                    format!("reserve one {} for me", d.name)
                } else {
                    format!("please book the {}", d.name)
                }
            }
            UserAct::Bye => if alt { "cheers bye" } else { "thank you goodbye" }.to_string(),
        };
        Ok(text)
    }

    pub fn user_text(&self, acts: &[UserAct]) -> Result<String> {
        if acts.is_empty() {
            return Ok(USER_FILLER.to_string());
        }
        let parts = acts.iter().map(|a| self.user_fragment(a)).collect::<Result<Vec<_>>>()?;
        Ok(parts.join(self.joiner()))
    }

    /// Every token the templates can produce for this configuration.
    pub fn token_set(&self, actions: &ActionSpace) -> BTreeSet<String> {
        let mut texts: Vec<String> = vec![SYSTEM_FILLER.into(), USER_FILLER.into(), self.joiner().into()];
        for a in actions.actions() {
            texts.push(self.system_text(&a.acts).expect("action space acts are valid"));
        }
        texts.push(self.user_text(&[UserAct::Bye]).unwrap());
        for (d, schema) in self.config.domains.iter().enumerate() {
            for (slot, values) in schema.slot_values.iter().enumerate() {
                texts.push(self.user_text(&[UserAct::Inform { domain: d, slot, value: None }]).unwrap());
                for v in 0..values.len() {
                    texts.push(self.user_text(&[UserAct::Inform { domain: d, slot, value: Some(v) }]).unwrap());
                }
            }
            for slot in 0..schema.requestable_slots.len() {
                texts.push(self.user_text(&[UserAct::Request { domain: d, slot }]).unwrap());
            }
            texts.push(self.user_text(&[UserAct::Book { domain: d }]).unwrap());
        }
        texts.iter().flat_map(|t| tokenize(t)).map(str::to_string).collect()
    }
}

pub fn tokenize(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}
