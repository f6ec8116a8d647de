use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::acts::UserAct;
use super::goal::UserGoal;
use super::state::DialogState;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    /// The system closed the dialog before the goal was met.
    SystemBye,
    /// The user ran out of patience.
    GaveUp,
    /// `max_turns` reached.
    Timeout,
}

impl Outcome {
    pub fn is_success(self) -> bool {
        self == Outcome::Success
    }
}

/// One system turn: what the user had just said, the state the system saw,
/// the action it took and the reward it received.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub user_acts: Vec<UserAct>,
    pub state: DialogState,
    pub action: usize,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DialogTrace {
    pub goal_seed: u64,
    pub goal: UserGoal,
    pub steps: Vec<TraceStep>,
    /// Set once the dialog has ended.
    pub outcome: Option<Outcome>,
}

impl DialogTrace {
    pub fn is_terminal(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

/// Writes one dialog per line.
pub fn write_traces(path: &Path, traces: &[DialogTrace]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for t in traces {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_traces(path: &Path) -> Result<Vec<DialogTrace>> {
    let mut traces = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            traces.push(serde_json::from_str(&line)?);
        }
    }
    Ok(traces)
}
