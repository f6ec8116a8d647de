use serde::{Deserialize, Serialize};

/// Outcome of one finished dialog.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DialogRecord {
    pub turns: usize,
    pub success: bool,
    pub matched: bool,
    /// Percentages in [0, 100].
    pub inform_precision: f64,
    pub inform_recall: f64,
    pub inform_f1: f64,
    pub reward: f64,
}

impl DialogRecord {
    /// Builds the inform scores from counts of correctly provided, informed and
    /// requested slots.
    pub fn inform_scores(provided: usize, informed: usize, requested: usize) -> (f64, f64, f64) {
        let precision = if informed == 0 { 0.0 } else { provided as f64 / informed as f64 };
        let recall = if requested == 0 { 1.0 } else { provided as f64 / requested as f64 };
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        (100.0 * precision, 100.0 * recall, 100.0 * f1)
    }
}

/// Dialog-level scores averaged over an evaluation run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub dialogs: usize,
    pub turns: f64,
    pub inform_f1: f64,
    pub match_rate: f64,
    pub success_rate: f64,
    pub mean_reward: f64,
}

impl Metrics {
    pub fn aggregate(records: &[DialogRecord]) -> Self {
        if records.is_empty() {
            return Self::default();
        }
        let n = records.len() as f64;
        let mean = |f: &dyn Fn(&DialogRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
        Self {
            dialogs: records.len(),
            turns: mean(&|r| r.turns as f64),
            inform_f1: mean(&|r| r.inform_f1),
            match_rate: 100.0 * mean(&|r| r.matched as u8 as f64),
            success_rate: 100.0 * mean(&|r| r.success as u8 as f64),
            mean_reward: mean(&|r| r.reward),
        }
    }
}
