//! Per-run CSV files.
//!
//! Metrics: `run_id,teacher_step,edge,g,success_rate,cum_interactions,event`,
//! one row per teacher step and per lifecycle event. `g` and `success_rate`
//! are empty when not measured. Q-values: `run_id,teacher_step,edge,q`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::metrics::{Event, RunMetrics};

pub const CSV_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub run_id: String,
    pub teacher_step: u64,
    pub edge: String,
    pub g: Option<f64>,
    pub success_rate: Option<f64>,
    pub cum_interactions: u64,
    pub event: Event,
}

#[derive(Serialize)]
struct QRow<'a> {
    run_id: &'a str,
    teacher_step: u64,
    edge: &'a str,
    q: f64,
}

pub fn write_metrics_csv(run_id: &str, m: &RunMetrics, out: impl Write) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in &m.records {
        w.serialize(CsvRow {
            run_id: run_id.to_string(),
            teacher_step: r.teacher_step,
            edge: r.edge.clone(),
            g: r.g,
            success_rate: r.success_rate,
            cum_interactions: r.cum_interactions,
            event: r.event,
        })?;
    }
    if m.records.is_empty() {
        w.write_record([
            "run_id",
            "teacher_step",
            "edge",
            "g",
            "success_rate",
            "cum_interactions",
            "event",
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_qvals_csv(run_id: &str, m: &RunMetrics, out: impl Write) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    if m.qvals.iter().all(|s| s.values.is_empty()) {
        w.write_record(["run_id", "teacher_step", "edge", "q"])?;
    }
    for snap in &m.qvals {
        for (edge, q) in &snap.values {
            w.serialize(QRow {
                run_id,
                teacher_step: snap.teacher_step,
                edge,
                q: *q,
            })?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_metrics_csv(input: impl Read) -> Result<Vec<CsvRow>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<Vec<CsvRow>, _>>()?)
}
