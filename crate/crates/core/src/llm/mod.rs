//! Asking a language model for sub-goal paths.
//!
//! [`query_paths`] drives the loop: prompt, parse, keep the paths that start
//! at the initial state and end at the goal, and reprompt for whatever is
//! still missing.

mod parse;
mod prompt;
mod provider;

use std::collections::BTreeMap;
use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symbolic::{SymbolicError, SymbolicInfo, SymbolicState};

pub use parse::{parse_response, ParsedResponse};
pub use prompt::{build_prompt, build_reprompt, PromptTemplate, PromptText};
pub use provider::{extract_path, FixtureProvider, HttpChatProvider, HttpSettings, LlmProvider};

pub const DEFAULT_MAX_RETRIES: usize = 5;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("unknown prompt template `{0}`")]
    UnknownTemplate(String),
    #[error("language model unavailable: {0}")]
    Unavailable(String),
    #[error("fixture error: {0}")]
    Fixture(String),
    #[error("no parsable paths in response ({} list(s) dropped)", dropped.len())]
    NoPathsFound { dropped: Vec<String> },
    #[error("no valid paths after {attempts} attempt(s)")]
    NoValidPaths { attempts: usize },
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

/// An ordered list of high-level states proposed as a route to the goal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubgoalPath(Vec<SymbolicState>);

impl SubgoalPath {
    pub fn new(states: Vec<SymbolicState>) -> Self {
        Self(states)
    }

    pub fn states(&self) -> &[SymbolicState] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_states(self) -> Vec<SymbolicState> {
        self.0
    }
}

impl fmt::Display for SubgoalPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathCheck {
    Ok,
    StartViolation,
    GoalViolation,
}

/// Whether `path` starts in a state satisfying the initial state and ends in
/// one satisfying the goal.
pub fn validate_path(path: &SubgoalPath, info: &SymbolicInfo) -> PathCheck {
    match path.states() {
        [first, .., last] if first.satisfies(info.initial()) => {
            if last.satisfies(info.goal()) {
                PathCheck::Ok
            } else {
                PathCheck::GoalViolation
            }
        }
        [_, ..] => PathCheck::StartViolation,
        [] => PathCheck::StartViolation,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub prompt: String,
    pub response: String,
}

/// Record of one [`query_paths`] call.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmSession {
    pub provider: String,
    pub attempts: usize,
    pub transcripts: Vec<Exchange>,
    pub accepted: Vec<SubgoalPath>,
    pub rejected: Vec<String>,
}

impl LlmSession {
    /// Human-readable dump of every exchange.
    pub fn transcript_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# provider: {}", self.provider);
        for (i, x) in self.transcripts.iter().enumerate() {
            let _ = writeln!(out, "=== attempt {} prompt ===", i + 1);
            out.push_str(&x.prompt);
            let _ = writeln!(out, "=== attempt {} response ===", i + 1);
            out.push_str(&x.response);
            if !x.response.ends_with('\n') {
                out.push('\n');
            }
        }
        let _ = writeln!(out, "=== accepted ===");
        for p in &self.accepted {
            let _ = writeln!(out, "{p}");
        }
        if !self.rejected.is_empty() {
            let _ = writeln!(out, "=== rejected ===");
            for r in &self.rejected {
                let _ = writeln!(out, "{r}");
            }
        }
        out
    }
}

/// Query until `n` distinct valid paths are collected or `max_retries`
/// attempts are spent. Later prompts request only the missing count.
pub fn query_paths(
    provider: &mut dyn LlmProvider,
    info: &SymbolicInfo,
    n: usize,
    max_retries: usize,
    template: PromptTemplate,
) -> Result<(Vec<SubgoalPath>, LlmSession), LlmError> {
    assert!(n >= 1 && max_retries >= 1);
    let mut session = LlmSession {
        provider: provider.describe(),
        ..Default::default()
    };
    let mut accepted: Vec<SubgoalPath> = Vec::new();
    let mut last_rejected: Vec<(SubgoalPath, PathCheck)> = Vec::new();
    let mut last_unparsed: Vec<String> = Vec::new();
    while session.attempts < max_retries && accepted.len() < n {
        let missing = n - accepted.len();
        let prompt = if session.attempts == 0 {
            build_prompt(info, missing, template)
        } else {
            build_reprompt(info, missing, template, &last_rejected, &last_unparsed)
        };
        session.attempts += 1;
        let response = provider.complete(&prompt)?;
        session.transcripts.push(Exchange {
            prompt: prompt.text,
            response: response.clone(),
        });
        last_rejected.clear();
        last_unparsed.clear();
        let parsed = match parse_response(&response, info) {
            Ok(p) => p,
            Err(LlmError::NoPathsFound { dropped }) => ParsedResponse {
                paths: Vec::new(),
                dropped,
            },
            Err(e) => return Err(e),
        };
        last_unparsed.extend(parsed.dropped.iter().cloned());
        session.rejected.extend(parsed.dropped);
        for path in parsed.paths {
            if accepted.len() == n {
                break;
            }
            let check = validate_path(&path, info);
            if check == PathCheck::Ok && !accepted.contains(&path) {
                accepted.push(path);
            } else {
                let why = match check {
                    PathCheck::Ok => "duplicate",
                    PathCheck::StartViolation => "start violation",
                    PathCheck::GoalViolation => "goal violation",
                };
                session.rejected.push(format!("{why}: {path}"));
                last_rejected.push((path, check));
            }
        }
    }
    if accepted.is_empty() {
        return Err(LlmError::NoValidPaths {
            attempts: session.attempts,
        });
    }
    session.accepted = accepted.clone();
    Ok((accepted, session))
}

/// [`query_paths`] with entity and predicate names swapped for synonyms in
/// everything the model sees. Accepted paths are mapped back to the original
/// names.
pub fn query_paths_with_synonyms(
    provider: &mut dyn LlmProvider,
    info: &SymbolicInfo,
    synonyms: &BTreeMap<String, String>,
    n: usize,
    max_retries: usize,
    template: PromptTemplate,
) -> Result<(Vec<SubgoalPath>, LlmSession), LlmError> {
    if synonyms.is_empty() {
        return query_paths(provider, info, n, max_retries, template);
    }
    let forward = |w: &str| rename_word(w, synonyms);
    let inverse: BTreeMap<String, String> =
        synonyms.iter().map(|(k, v)| (v.clone(), k.clone())).collect();
    let renamed = info.renamed(forward)?;
    let (paths, session) = query_paths(provider, &renamed, n, max_retries, template)?;
    let back = paths
        .into_iter()
        .map(|p| {
            SubgoalPath::new(
                p.states()
                    .iter()
                    .map(|s| s.map_names(|w| rename_word(w, &inverse)))
                    .collect(),
            )
        })
        .collect();
    Ok((back, session))
}

/// Replace each `_`-separated piece of `word` found in `map`, so that
/// `Key_1` becomes `Code_1` under `Key -> Code`.
fn rename_word(word: &str, map: &BTreeMap<String, String>) -> String {
    if let Some(w) = map.get(word) {
        return w.clone();
    }
    word.split('_')
        .map(|piece| map.get(piece).map_or(piece, String::as_str))
        .collect::<Vec<_>>()
        .join("_")
}
