//! Interaction accounting and per-run records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Step counter for one unit of work, bounded by what is left of the run's
/// budget. Work functions tick it per environment interaction; the caller
/// commits it to the [`Ledger`] afterwards.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Meter {
    pub limit: u64,
    pub train: u64,
    pub reset: u64,
    pub eval: u64,
}

impl Meter {
    pub fn new(limit: u64) -> Self {
        Self {
            limit,
            ..Self::default()
        }
    }

    pub fn used(&self) -> u64 {
        self.train + self.reset + self.eval
    }

    pub fn exhausted(&self) -> bool {
        self.used() >= self.limit
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Charges {
    pub train: u64,
    pub reset: u64,
    pub eval: u64,
}

impl Charges {
    pub fn total(&self) -> u64 {
        self.train + self.reset + self.eval
    }
}

/// Global interaction budget with a per-task breakdown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    cap: u64,
    used: u64,
    per_task: BTreeMap<String, Charges>,
}

impl Ledger {
    pub fn new(cap: u64) -> Self {
        Self {
            cap,
            used: 0,
            per_task: BTreeMap::new(),
        }
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.cap.saturating_sub(self.used)
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.cap
    }

    pub fn meter(&self) -> Meter {
        Meter::new(self.remaining())
    }

    pub fn commit(&mut self, task: &str, meter: &Meter) {
        let c = self.per_task.entry(task.to_string()).or_default();
        c.train += meter.train;
        c.reset += meter.reset;
        c.eval += meter.eval;
        self.used += meter.used();
        debug_assert!(self.used <= self.cap, "meter overran the budget");
    }

    pub fn task(&self, task: &str) -> Charges {
        self.per_task.get(task).copied().unwrap_or_default()
    }

    pub fn tasks(&self) -> impl Iterator<Item = (&str, &Charges)> {
        self.per_task.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Per-task charges add up to the total.
    pub fn balanced(&self) -> bool {
        self.per_task.values().map(Charges::total).sum::<u64>() == self.used
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Step,
    Activated,
    Converged,
    Discarded,
    Finished,
    BudgetExhausted,
    Stalled,
    /// Closing row carrying the final greedy success rate.
    Final,
}

impl Event {
    pub fn as_str(self) -> &'static str {
        match self {
            Event::Step => "step",
            Event::Activated => "activated",
            Event::Converged => "converged",
            Event::Discarded => "discarded",
            Event::Finished => "finished",
            Event::BudgetExhausted => "budget_exhausted",
            Event::Stalled => "stalled",
            Event::Final => "final",
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub teacher_step: u64,
    pub edge: String,
    pub g: Option<f64>,
    pub success_rate: Option<f64>,
    pub cum_interactions: u64,
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSnapshot {
    pub teacher_step: u64,
    pub values: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total_interactions: u64,
    pub success_rate: f64,
    pub succeeded: bool,
    pub teacher_steps: u64,
    pub note: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub records: Vec<Record>,
    pub qvals: Vec<QSnapshot>,
    pub summary: Summary,
}

impl RunMetrics {
    pub fn push(
        &mut self,
        teacher_step: u64,
        edge: impl Into<String>,
        g: Option<f64>,
        success_rate: Option<f64>,
        cum_interactions: u64,
        event: Event,
    ) {
        self.records.push(Record {
            teacher_step,
            edge: edge.into(),
            g,
            success_rate,
            cum_interactions,
            event,
        });
    }

    /// Store the summary and append the closing [`Event::Final`] row.
    pub fn finalize(&mut self, summary: Summary) {
        self.push(
            summary.teacher_steps,
            "",
            None,
            Some(summary.success_rate),
            summary.total_interactions,
            Event::Final,
        );
        self.summary = summary;
    }

    /// Interactions at which each edge converged.
    pub fn convergences(&self) -> Vec<(&str, u64)> {
        self.records
            .iter()
            .filter(|r| r.event == Event::Converged)
            .map(|r| (r.edge.as_str(), r.cum_interactions))
            .collect()
    }
}
