//! Plain-text edge lists.
//!
//! ```text
//! # comment
//! start: At(OutsideRoom)
//! goal: At(Green_Goal)
//! At(OutsideRoom) -> Holding(Key_1)
//! Holding(Key_1) -> Unlocked(Door)
//! ```

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{GraphError, NodeId, SubgoalDag};
use crate::symbolic::{SymbolicInfo, SymbolicState};

pub fn to_edge_list(dag: &SubgoalDag) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "start: {}", dag.node(dag.start()).expect("start node"));
    let _ = writeln!(out, "goal: {}", dag.node(dag.goal()).expect("goal node"));
    for e in dag.edges() {
        let _ = writeln!(out, "{}", dag.describe(e));
    }
    out
}

pub fn parse_edge_list(text: &str, info: &SymbolicInfo) -> Result<SubgoalDag, GraphError> {
    let mut nodes: Vec<SymbolicState> = Vec::new();
    let mut index: BTreeMap<SymbolicState, NodeId> = BTreeMap::new();
    let mut intern = |s: SymbolicState, nodes: &mut Vec<SymbolicState>| {
        *index.entry(s.clone()).or_insert_with(|| {
            nodes.push(s);
            nodes.len() - 1
        })
    };
    let mut start = None;
    let mut goal = None;
    let mut edges = Vec::new();
    let parse = |line: usize, expr: &str| {
        info.parse_state(expr).map_err(|e| GraphError::Parse {
            line,
            reason: e.to_string(),
        })
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        if let Some(rest) = l.strip_prefix("start:") {
            start = Some(intern(parse(line, rest)?, &mut nodes));
        } else if let Some(rest) = l.strip_prefix("goal:") {
            goal = Some(intern(parse(line, rest)?, &mut nodes));
        } else if let Some((a, b)) = l.split_once("->") {
            let a = intern(parse(line, a)?, &mut nodes);
            let b = intern(parse(line, b)?, &mut nodes);
            edges.push((a, b));
        } else {
            return Err(GraphError::Parse {
                line,
                reason: format!("expected `start:`, `goal:` or `src -> dst`, got `{l}`"),
            });
        }
    }
    let missing = |what: &str| GraphError::Parse {
        line: 0,
        reason: format!("missing `{what}:` header"),
    };
    let start = start.ok_or_else(|| missing("start"))?;
    let goal = goal.ok_or_else(|| missing("goal"))?;
    SubgoalDag::from_edges(nodes, &edges, start, goal)
}
