use std::collections::BTreeSet;
use std::sync::Arc;

use super::acts::{ActionSpace, DialogAct, Intent, SlotRef, UserAct};
use super::config::EnvConfig;
use super::goal::{Database, UserGoal};
use super::metrics::DialogRecord;
use super::nlg::Verbalizer;
use super::state::{DialogState, StateLayout};
use super::trace::{DialogTrace, Outcome, TraceStep};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum AgendaItem {
    Constraint { domain: usize, slot: usize },
    Request { domain: usize, slot: usize },
    Book { domain: usize },
    Bye,
}

/// What the simulated user knows the system knows, per domain.
#[derive(Clone, Debug)]
struct Progress {
    active: bool,
    /// `Some(Some(v))` = value given, `Some(None)` = "don't care".
    known: Vec<Option<Option<usize>>>,
    sys_requested: Vec<bool>,
    informed_now: Vec<bool>,
    open: Vec<bool>,
    sys_informed: Vec<bool>,
    requested_now: Vec<bool>,
    name_informed: bool,
    /// Offered entity, only ever set to one consistent with the goal.
    offer: Option<usize>,
    book_open: bool,
    booked: bool,
    /// Requested slots the system informed while a valid offer stood.
    provided: Vec<bool>,
}

impl Progress {
    fn new(n_inf: usize, n_req: usize) -> Self {
        Self {
            active: false,
            known: vec![None; n_inf],
            sys_requested: vec![false; n_inf],
            informed_now: vec![false; n_inf],
            open: vec![false; n_req],
            sys_informed: vec![false; n_req],
            requested_now: vec![false; n_req],
            name_informed: false,
            offer: None,
            book_open: false,
            booked: false,
            provided: vec![false; n_req],
        }
    }
}

#[derive(Clone, Debug)]
struct Run {
    goal: UserGoal,
    agenda: Vec<AgendaItem>,
    progress: Vec<Progress>,
    turn: usize,
    last_intents: [bool; 4],
    idle: usize,
    /// Distinct (domain, requestable slot) pairs the system informed.
    informed: BTreeSet<(usize, usize)>,
    state: DialogState,
    user_acts: Vec<UserAct>,
    trace: DialogTrace,
}

/// Observation returned by [`DialogEnv::reset`].
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub state: DialogState,
    pub user_acts: Vec<UserAct>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub state: DialogState,
    pub reward: f64,
    pub done: bool,
    pub user_acts: Vec<UserAct>,
    pub outcome: Option<Outcome>,
}

/// Agenda-based simulated user plus the state tracker of the system side.
///
/// Cloning is cheap: the configuration, database and action space are shared.
#[derive(Clone, Debug)]
pub struct DialogEnv {
    config: Arc<EnvConfig>,
    db: Arc<Database>,
    actions: Arc<ActionSpace>,
    layout: Arc<StateLayout>,
    verbalizer: Arc<Verbalizer>,
    run: Option<Run>,
}

impl DialogEnv {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            db: Arc::new(Database::generate(&config)),
            actions: Arc::new(ActionSpace::new(&config)),
            layout: Arc::new(StateLayout::new(&config)),
            verbalizer: Arc::new(Verbalizer::new(&config)),
            config: Arc::new(config),
            run: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn database(&self) -> &Database {
        &self.db
    }

    pub fn action_space(&self) -> &ActionSpace {
        &self.actions
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn verbalizer(&self) -> &Verbalizer {
        &self.verbalizer
    }

    pub fn state_dim(&self) -> usize {
        self.layout.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    /// Starts a new dialog with the goal drawn from `goal_seed`.
    pub fn reset(&mut self, goal_seed: u64) -> Observation {
        let goal = UserGoal::sample(&self.config, &self.db, goal_seed);
        let mut agenda = vec![AgendaItem::Bye];
        for g in goal.domains.iter().rev() {
            if g.book {
                agenda.push(AgendaItem::Book { domain: g.domain });
            }
            for &slot in g.requests.iter().rev() {
                agenda.push(AgendaItem::Request { domain: g.domain, slot });
            }
            for &(slot, _) in g.constraints.iter().rev() {
                agenda.push(AgendaItem::Constraint { domain: g.domain, slot });
            }
        }
        let progress = self
            .config
            .domains
            .iter()
            .map(|d| Progress::new(d.informable_slots.len(), d.requestable_slots.len()))
            .collect();
        let mut run = Run {
            trace: DialogTrace { goal_seed, goal: goal.clone(), steps: Vec::new(), outcome: None },
            goal,
            agenda,
            progress,
            turn: 0,
            last_intents: [false; 4],
            idle: 0,
            informed: BTreeSet::new(),
            state: DialogState::zeros(self.layout.len()),
            user_acts: Vec::new(),
        };
        run.user_acts = pop_agenda(&mut run);
        run.state = self.encode(&run);
        let obs = Observation { state: run.state.clone(), user_acts: run.user_acts.clone() };
        self.run = Some(run);
        obs
    }

    pub fn step(&mut self, action: usize) -> Result<StepResult> {
        let acts = self.actions.get(action)?.acts.clone();
        let config = Arc::clone(&self.config);
        let db = Arc::clone(&self.db);
        let run = self
            .run
            .as_mut()
            .ok_or_else(|| Error::usage("step called before reset"))?;
        if run.trace.is_terminal() {
            return Err(Error::usage("dialog already finished"));
        }
        let prev_state = std::mem::take(&mut run.state);
        let prev_user = std::mem::take(&mut run.user_acts);
        for p in &mut run.progress {
            p.informed_now.iter_mut().for_each(|b| *b = false);
            p.requested_now.iter_mut().for_each(|b| *b = false);
        }
        run.last_intents = [false; 4];

        let mut responses = Vec::new();
        let mut productive = false;
        let mut system_bye = false;
        for act in &acts {
            run.last_intents[act.intent.index()] = true;
            match (act.domain, act.slot) {
                (Some(d), SlotRef::Informable(s)) => {
                    let p = &mut run.progress[d];
                    p.sys_requested[s] = true;
                    if let Some(g) = run.goal.domain(d) {
                        let value = g.constraint(s);
                        productive |= p.known[s].is_none();
                        p.known[s] = Some(value);
                        p.informed_now[s] = true;
                        p.active = true;
                        run.agenda.retain(|i| *i != AgendaItem::Constraint { domain: d, slot: s });
                        responses.push(UserAct::Inform { domain: d, slot: s, value });
                    }
                }
                (Some(d), SlotRef::Name) => {
                    let p = &mut run.progress[d];
                    p.name_informed = true;
                    if let Some(g) = run.goal.domain(d) {
                        let known: Vec<Option<usize>> = p.known.iter().map(|k| k.flatten()).collect();
                        let entity = db.first_match(d, &known);
                        match entity.filter(|&e| g.accepts(&db.entities[d][e])) {
                            Some(e) => {
                                productive |= p.offer.is_none();
                                p.offer = Some(e);
                            }
                            None => {
                                // Reject and correct the first violated constraint.
                                let violated = g.constraints.iter().copied().find(|&(s, v)| {
                                    entity.is_none_or(|e| db.entities[d][e][s] != v)
                                        && p.known[s] != Some(Some(v))
                                });
                                let violated = violated.or_else(|| {
                                    g.constraints.iter().copied().find(|&(s, v)| {
                                        entity.is_none_or(|e| db.entities[d][e][s] != v)
                                    })
                                });
                                if let Some((s, v)) = violated {
                                    productive |= p.known[s].is_none();
                                    p.known[s] = Some(Some(v));
                                    p.informed_now[s] = true;
                                    p.active = true;
                                    run.agenda.retain(|i| *i != AgendaItem::Constraint { domain: d, slot: s });
                                    responses.push(UserAct::Inform { domain: d, slot: s, value: Some(v) });
                                }
                            }
                        }
                    }
                }
                (Some(d), SlotRef::Requestable(r)) => {
                    run.informed.insert((d, r));
                    let p = &mut run.progress[d];
                    p.sys_informed[r] = true;
                    let wanted = run.goal.domain(d).is_some_and(|g| g.requests.contains(&r));
                    if wanted && p.offer.is_some() && !p.provided[r] {
                        p.provided[r] = true;
                        p.open[r] = false;
                        productive = true;
                        run.agenda.retain(|i| *i != AgendaItem::Request { domain: d, slot: r });
                    }
                }
                (Some(d), SlotRef::None) if act.intent == Intent::Book => {
                    let p = &mut run.progress[d];
                    let wanted = run.goal.domain(d).is_some_and(|g| g.book);
                    if wanted && p.offer.is_some() && !p.booked {
                        p.booked = true;
                        p.book_open = false;
                        productive = true;
                        run.agenda.retain(|i| *i != AgendaItem::Book { domain: d });
                    }
                }
                (None, SlotRef::Bye) => system_bye = true,
                _ => {}
            }
        }
        run.turn += 1;
        run.idle = if productive { 0 } else { run.idle + 1 };

        let outcome = if goal_satisfied(run) {
            responses = vec![UserAct::Bye];
            Some(Outcome::Success)
        } else if system_bye {
            responses = vec![UserAct::Bye];
            Some(Outcome::SystemBye)
        } else {
            if responses.is_empty() {
                responses = reask(run);
            }
            if responses.is_empty() {
                responses = pop_agenda(run);
            }
            if config.user_patience > 0 && run.idle >= config.user_patience {
                responses = vec![UserAct::Bye];
                Some(Outcome::GaveUp)
            } else if run.turn >= config.max_turns {
                Some(Outcome::Timeout)
            } else {
                None
            }
        };
        let mut reward = config.step_penalty;
        if let Some(o) = outcome {
            reward += if o.is_success() { config.success_reward } else { config.failure_reward };
        }
        run.trace.steps.push(TraceStep { user_acts: prev_user, state: prev_state, action, reward });
        run.trace.outcome = outcome;
        run.user_acts = responses;
        let state = self.encode(self.run.as_ref().unwrap());
        let run = self.run.as_mut().unwrap();
        run.state = state.clone();
        Ok(StepResult {
            state,
            reward,
            done: outcome.is_some(),
            user_acts: run.user_acts.clone(),
            outcome,
        })
    }

    fn encode(&self, run: &Run) -> DialogState {
        let l = &self.layout;
        let mut st = DialogState::zeros(l.len());
        for (d, p) in run.progress.iter().enumerate() {
            st.set(l.active(d), p.active);
            st.set(l.name_informed(d), p.name_informed);
            st.set(l.offer_valid(d), p.offer.is_some());
            st.set(l.book_open(d), p.book_open);
            st.set(l.booked(d), p.booked);
            for s in 0..p.known.len() {
                st.set(l.constrained(d, s), p.known[s].is_some());
                st.set(l.system_requested(d, s), p.sys_requested[s]);
                st.set(l.user_informed_now(d, s), p.informed_now[s]);
            }
            for r in 0..p.open.len() {
                st.set(l.user_requested(d, r), p.open[r]);
                st.set(l.system_informed(d, r), p.sys_informed[r]);
                st.set(l.user_requested_now(d, r), p.requested_now[r]);
            }
        }
        for intent in Intent::ALL {
            st.set(l.last_intent(intent), run.last_intents[intent.index()]);
        }
        st.set(l.turn_bucket(run.turn), true);
        st
    }

    fn current(&self) -> Result<&Run> {
        self.run.as_ref().ok_or_else(|| Error::usage("no dialog in progress"))
    }

    pub fn state(&self) -> Result<&DialogState> {
        Ok(&self.current()?.state)
    }

    /// User acts of the latest user turn.
    pub fn user_acts(&self) -> Result<&[UserAct]> {
        Ok(&self.current()?.user_acts)
    }

    pub fn user_text(&self) -> Result<String> {
        self.verbalizer.user_text(self.user_acts()?)
    }

    pub fn goal(&self) -> Result<&UserGoal> {
        Ok(&self.current()?.goal)
    }

    pub fn turn(&self) -> usize {
        self.run.as_ref().map_or(0, |r| r.turn)
    }

    pub fn is_done(&self) -> bool {
        self.run.as_ref().is_some_and(|r| r.trace.is_terminal())
    }

    pub fn trace(&self) -> Result<&DialogTrace> {
        Ok(&self.current()?.trace)
    }

    /// Metric record of the finished dialog.
    pub fn record(&self) -> Result<DialogRecord> {
        let run = self.current()?;
        let outcome = run
            .trace
            .outcome
            .ok_or_else(|| Error::usage("dialog has not finished"))?;
        let provided: usize = run.progress.iter().map(|p| p.provided.iter().filter(|&&b| b).count()).sum();
        let (inform_precision, inform_recall, inform_f1) =
            DialogRecord::inform_scores(provided, run.informed.len(), run.goal.total_requests());
        let matched = run.goal.domains.iter().all(|g| run.progress[g.domain].offer.is_some());
        Ok(DialogRecord {
            turns: run.turn,
            success: outcome.is_success(),
            matched,
            inform_precision,
            inform_recall,
            inform_f1,
            reward: run.trace.total_reward(),
        })
    }

    /// Scores a finished trace by replaying its actions against its goal.
    pub fn evaluate_dialog(&self, trace: &DialogTrace) -> Result<DialogRecord> {
        if !trace.is_terminal() {
            return Err(Error::usage("cannot evaluate an unfinished dialog"));
        }
        let mut env = self.clone();
        env.reset(trace.goal_seed);
        if env.goal()? != &trace.goal {
            return Err(Error::Format("trace goal does not match its goal seed".into()));
        }
        for step in &trace.steps {
            if env.state()? != &step.state {
                return Err(Error::Format("trace diverges from the simulator".into()));
            }
            env.step(step.action)?;
        }
        if env.trace()?.outcome != trace.outcome {
            return Err(Error::Format("trace outcome does not match replay".into()));
        }
        env.record()
    }

    pub fn system_text(&self, acts: &[DialogAct]) -> Result<String> {
        self.verbalizer.system_text(acts)
    }
}

fn goal_satisfied(run: &Run) -> bool {
    run.goal.domains.iter().all(|g| {
        let p = &run.progress[g.domain];
        p.offer.is_some() && g.requests.iter().all(|&r| p.provided[r]) && (!g.book || p.booked)
    })
}

/// Repeats still-unanswered requests of the first domain that has any.
fn reask(run: &mut Run) -> Vec<UserAct> {
    for g in &run.goal.domains {
        let p = &mut run.progress[g.domain];
        let mut acts = Vec::new();
        for (r, open) in p.open.iter().enumerate() {
            if *open {
                p.requested_now[r] = true;
                acts.push(UserAct::Request { domain: g.domain, slot: r });
            }
        }
        if p.book_open {
            acts.push(UserAct::Book { domain: g.domain });
        }
        if !acts.is_empty() {
            return acts;
        }
    }
    Vec::new()
}

/// Pops the next user turn off the agenda. Introducing a new domain reveals
/// two constraints; requests and the booking of a domain come together.
fn pop_agenda(run: &mut Run) -> Vec<UserAct> {
    while let Some(item) = run.agenda.pop() {
        match item {
            AgendaItem::Constraint { domain, slot } => {
                if run.progress[domain].known[slot].is_some() {
                    continue;
                }
                let intro = !run.progress[domain].active;
                let mut acts = vec![inform_constraint(run, domain, slot)];
                if intro {
                    while let Some(&AgendaItem::Constraint { domain: d2, slot: s2 }) = run.agenda.last() {
                        if d2 != domain {
                            break;
                        }
                        run.agenda.pop();
                        if run.progress[domain].known[s2].is_none() {
                            acts.push(inform_constraint(run, domain, s2));
                            break;
                        }
                    }
                }
                return acts;
            }
            AgendaItem::Request { domain, .. } | AgendaItem::Book { domain } => {
                let mut group = vec![item];
                while let Some(&next) = run.agenda.last() {
                    match next {
                        AgendaItem::Request { domain: d, .. } | AgendaItem::Book { domain: d } if d == domain => {
                            group.push(next);
                            run.agenda.pop();
                        }
                        _ => break,
                    }
                }
                let p = &mut run.progress[domain];
                let mut acts = Vec::new();
                for g in group {
                    match g {
                        AgendaItem::Request { slot, .. } if !p.provided[slot] => {
                            p.open[slot] = true;
                            p.requested_now[slot] = true;
                            acts.push(UserAct::Request { domain, slot });
                        }
                        AgendaItem::Book { .. } if !p.booked => {
                            p.book_open = true;
                            acts.push(UserAct::Book { domain });
                        }
                        _ => {}
                    }
                }
                if !acts.is_empty() {
                    p.active = true;
                    return acts;
                }
            }
            AgendaItem::Bye => return vec![UserAct::Bye],
        }
    }
    Vec::new()
}

fn inform_constraint(run: &mut Run, domain: usize, slot: usize) -> UserAct {
    let value = run.goal.domain(domain).and_then(|g| g.constraint(slot));
    let p = &mut run.progress[domain];
    p.known[slot] = Some(value);
    p.informed_now[slot] = true;
    p.active = true;
    UserAct::Inform { domain, slot, value }
}
