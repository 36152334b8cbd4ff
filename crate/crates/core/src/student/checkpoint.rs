//! Flat text dump of a Q-table.
//!
//! ```text
//! # lgts q-table
//! alpha 0.1
//! gamma 0.95
//! seed 7
//! interactions 120000
//! 0000000000000000000000000000abcd,3,0.4304672100000001
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so a reload is
//! exact.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{StudentConfig, TabularQ};
use crate::env::{Action, StateKey};

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TabularQ {
    pub fn to_text(&self) -> String {
        let mut out = String::from("# lgts q-table\n");
        let c = &self.config;
        let _ = writeln!(out, "alpha {}", c.alpha);
        let _ = writeln!(out, "gamma {}", c.gamma);
        let _ = writeln!(out, "epsilon_start {}", c.epsilon_start);
        let _ = writeln!(out, "epsilon_end {}", c.epsilon_end);
        let _ = writeln!(out, "epsilon_decay {}", c.epsilon_decay);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "interactions {}", self.interactions);
        let mut keys: Vec<_> = self.table.keys().copied().collect();
        keys.sort_unstable();
        for k in keys {
            for (a, v) in self.table[&k].iter().enumerate() {
                if *v != 0.0 {
                    let _ = writeln!(out, "{:032x},{a},{v}", k.0);
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CheckpointError> {
        let mut q = TabularQ::new(StudentConfig::default(), 0);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let err = |reason: String| CheckpointError::Parse { line, reason };
            if let Some((name, value)) = l.split_once(' ') {
                let float = || value.parse::<f64>().map_err(|e| err(e.to_string()));
                let int = || value.parse::<u64>().map_err(|e| err(e.to_string()));
                match name {
                    "alpha" => q.config.alpha = float()?,
                    "gamma" => q.config.gamma = float()?,
                    "epsilon_start" => q.config.epsilon_start = float()?,
                    "epsilon_end" => q.config.epsilon_end = float()?,
                    "epsilon_decay" => q.config.epsilon_decay = int()?,
                    "seed" => q.seed = int()?,
                    "interactions" => q.interactions = int()?,
                    other => return Err(err(format!("unknown header `{other}`"))),
                }
                continue;
            }
            let mut parts = l.split(',');
            let (Some(k), Some(a), Some(v), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(err("expected `key,action,value`".into()));
            };
            let k = u128::from_str_radix(k, 16).map_err(|e| err(e.to_string()))?;
            let a: usize = a.parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?;
            if a >= Action::COUNT {
                return Err(err(format!("action index {a} out of range")));
            }
            let v: f64 = v.parse().map_err(|e: std::num::ParseFloatError| err(e.to_string()))?;
            q.set_q(StateKey(k), Action::from_index(a), v);
        }
        Ok(q)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
