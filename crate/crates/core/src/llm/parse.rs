//! Extraction of numbered state lists from free-form model output.
//!
//! Two shapes are recognised:
//!
//! ```text
//! Path 1:                         1. At(A) -> Holding(K) -> At(G)
//! 1. At(A)                        2. At(A) -> At(G)
//! 2. Holding(K)
//! 3. At(G)
//! ```
//!
//! A vertical list ends at the first non-item line or when numbering
//! restarts at 1. A single numbered item containing `->` is a whole path.

use std::sync::LazyLock;

use regex::Regex;

use super::{LlmError, SubgoalPath};
use crate::symbolic::SymbolicInfo;

static ITEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:[-*]\s*)?(\d+)\s*[.):]\s*(.+?)\s*$").expect("item regex"));

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedResponse {
    pub paths: Vec<SubgoalPath>,
    /// One message per list that was found but could not be used.
    pub dropped: Vec<String>,
}

fn clean(item: &str) -> &str {
    item.trim_matches(|c: char| c.is_whitespace() || matches!(c, '`' | '*' | '"' | '.' | ',' | ';'))
}

fn split_arrow(item: &str) -> Option<Vec<&str>> {
    if item.contains("->") || item.contains('→') {
        Some(
            item.split("->")
                .flat_map(|p| p.split('→'))
                .map(clean)
                .collect(),
        )
    } else {
        None
    }
}

fn raw_lists(text: &str) -> Vec<Vec<String>> {
    let mut lists: Vec<Vec<String>> = Vec::new();
    let mut current: Vec<String> = Vec::new();
    let mut expected = 1;
    let flush = |current: &mut Vec<String>, lists: &mut Vec<Vec<String>>| {
        if !current.is_empty() {
            lists.push(std::mem::take(current));
        }
    };
    for line in text.lines() {
        let Some(caps) = ITEM.captures(line) else {
            flush(&mut current, &mut lists);
            expected = 1;
            continue;
        };
        let number: usize = caps[1].parse().unwrap_or(0);
        let body = caps[2].to_string();
        if split_arrow(&body).is_some() {
            flush(&mut current, &mut lists);
            lists.push(vec![body]);
            expected = 1;
            continue;
        }
        if number == 1 || number != expected {
            flush(&mut current, &mut lists);
        }
        current.push(body);
        expected = number + 1;
    }
    flush(&mut current, &mut lists);
    lists
}

/// Every numbered list whose items all parse as states over `info`. Lists
/// with an unparsable item, or fewer than two states, are dropped
/// individually.
pub fn parse_response(text: &str, info: &SymbolicInfo) -> Result<ParsedResponse, LlmError> {
    let mut parsed = ParsedResponse::default();
    for list in raw_lists(text) {
        let items: Vec<&str> = match &list[..] {
            [single] => match split_arrow(single) {
                Some(parts) => parts,
                None => vec![clean(single)],
            },
            many => many.iter().map(|s| clean(s)).collect(),
        };
        if items.len() < 2 {
            parsed
                .dropped
                .push(format!("list `{}` has fewer than two states", items.join(" ")));
            continue;
        }
        match items
            .iter()
            .map(|i| info.parse_state(i))
            .collect::<Result<Vec<_>, _>>()
        {
            Ok(states) => parsed.paths.push(SubgoalPath::new(states)),
            Err(e) => parsed.dropped.push(format!("list `{}`: {e}", items.join(" -> "))),
        }
    }
    if parsed.paths.is_empty() {
        return Err(LlmError::NoPathsFound {
            dropped: parsed.dropped,
        });
    }
    Ok(parsed)
}
