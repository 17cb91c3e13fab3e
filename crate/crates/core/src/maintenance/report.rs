use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModuleCounts {
    pub runs: usize,
    pub candidates: usize,
    pub created: usize,
    pub checked: usize,
    pub repaired: usize,
    pub obsolete: usize,
    pub deleted: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub update_ms: f64,
    pub delete_ms: f64,
    pub create_ms: f64,
    pub total_ms: f64,
}

/// Outcome of one maintenance call.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub mode: String,
    pub events: usize,
    pub iterations: usize,
    pub cycle_passes: usize,
    pub checked: usize,
    pub valid: usize,
    pub repaired: usize,
    pub obsolete: usize,
    pub deleted: usize,
    pub created: usize,
    /// Sum of candidate-set sizes over all Create runs.
    pub candidates: usize,
    /// Nodes conforming to some input connector, summed over modules.
    pub candidate_universe: usize,
    pub modules: BTreeMap<String, ModuleCounts>,
    pub time: Timings,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<String>,
}

impl Report {
    /// Adds the counts of another report; `mode` and `candidate_universe`
    /// take the other report's values.
    pub fn absorb(&mut self, other: Report) {
        self.mode = other.mode;
        self.events += other.events;
        self.iterations += other.iterations;
        self.cycle_passes += other.cycle_passes;
        self.checked += other.checked;
        self.valid += other.valid;
        self.repaired += other.repaired;
        self.obsolete += other.obsolete;
        self.deleted += other.deleted;
        self.created += other.created;
        self.candidates += other.candidates;
        self.candidate_universe = other.candidate_universe;
        for (name, c) in other.modules {
            let m = self.modules.entry(name).or_default();
            m.runs += c.runs;
            m.candidates += c.candidates;
            m.created += c.created;
            m.checked += c.checked;
            m.repaired += c.repaired;
            m.obsolete += c.obsolete;
            m.deleted += c.deleted;
        }
        self.time.update_ms += other.time.update_ms;
        self.time.delete_ms += other.time.delete_ms;
        self.time.create_ms += other.time.create_ms;
        self.time.total_ms += other.time.total_ms;
        self.trace.extend(other.trace);
    }

    /// Incremental candidates relative to the batch universe.
    pub fn candidate_ratio(&self) -> f64 {
        if self.candidate_universe == 0 {
            0.0
        } else {
            self.candidates as f64 / self.candidate_universe as f64
        }
    }
}
