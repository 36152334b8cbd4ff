//! Exact graph edit distance by branch and bound.
//!
//! Edit operations are node insertion/deletion and edge insertion/deletion,
//! each costing 1. A solution is a partial injective map from the nodes of
//! the first graph to the nodes of the second; unmapped nodes on either side
//! are deleted or inserted along with their edges.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{GraphError, SubgoalDag};
use crate::symbolic::SymbolicState;

pub const MAX_GED_NODES: usize = 12;
const MAX_EXPANSIONS: u64 = 20_000_000;

/// Which node pairs may be matched to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeMatch {
    /// Only nodes carrying the same label.
    #[default]
    Labels,
    /// Any node with any node; distance between the unlabeled shapes.
    Structure,
}

/// Small directed graph with integer node classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditGraph {
    /// `adj[u] & (1 << v)` is set iff u -> v.
    pub adj: Vec<u32>,
    pub class: Vec<u32>,
}

impl EditGraph {
    pub fn new(n: usize, edges: &[(usize, usize)], class: Vec<u32>) -> Self {
        assert_eq!(class.len(), n);
        let mut adj = vec![0u32; n];
        for &(a, b) in edges {
            adj[a] |= 1 << b;
        }
        Self { adj, class }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a] & (1 << b) != 0
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.count_ones() as usize).sum()
    }
}

/// Edit distance between two sub-goal DAGs; nodes carry their states as
/// labels.
pub fn graph_edit_distance<'a>(
    g1: &'a SubgoalDag,
    g2: &'a SubgoalDag,
    mode: NodeMatch,
) -> Result<usize, GraphError> {
    let mut classes: BTreeMap<&SymbolicState, u32> = BTreeMap::new();
    let mut convert = |g: &'a SubgoalDag| {
        let class = g
            .nodes()
            .iter()
            .map(|s| {
                let next = classes.len() as u32;
                *classes.entry(s).or_insert(next)
            })
            .collect();
        let edges: Vec<_> = g.edges().map(|e| (e.src, e.dst)).collect();
        EditGraph::new(g.node_count(), &edges, class)
    };
    let (a, b) = (convert(g1), convert(g2));
    edit_distance(&a, &b, mode)
}

struct Search<'a> {
    a: &'a EditGraph,
    b: &'a EditGraph,
    mode: NodeMatch,
    /// map[i] = Some(j) or None (deleted) for assigned prefix of a.
    map: Vec<Option<usize>>,
    used: u32,
    best: usize,
    expansions: u64,
}

impl Search<'_> {
    fn compatible(&self, i: usize, j: usize) -> bool {
        self.mode == NodeMatch::Structure || self.a.class[i] == self.b.class[j]
    }

    /// Cost of the edges between a's node `i` and the already assigned
    /// prefix, given that `i` maps to `j`.
    fn edge_cost(&self, i: usize, j: Option<usize>) -> usize {
        let mut cost = 0;
        for (k, mk) in self.map.iter().enumerate() {
            for (ea, eb) in [
                (self.a.has_edge(i, k), (j, *mk)),
                (self.a.has_edge(k, i), (*mk, j)),
            ] {
                let eb = match eb {
                    (Some(x), Some(y)) => self.b.has_edge(x, y),
                    _ => false,
                };
                cost += usize::from(ea != eb);
            }
        }
        cost
    }

    fn lower_bound(&self, depth: usize) -> usize {
        let rem_a = self.a.len() - depth;
        let rem_b = self.b.len() - self.used.count_ones() as usize;
        let open_a = (0..self.a.len())
            .map(|u| {
                (0..self.a.len())
                    .filter(|&v| self.a.has_edge(u, v) && (u >= depth || v >= depth))
                    .count()
            })
            .sum::<usize>();
        let free = !self.used;
        let open_b = (0..self.b.len())
            .map(|u| {
                let row = self.b.adj[u];
                if free & (1 << u) != 0 {
                    row.count_ones() as usize
                } else {
                    (row & free).count_ones() as usize
                }
            })
            .sum::<usize>();
        rem_a.abs_diff(rem_b) + open_a.abs_diff(open_b)
    }

    fn finish_cost(&self) -> usize {
        let free = !self.used;
        let mut cost = 0;
        for u in 0..self.b.len() {
            let row = self.b.adj[u];
            if free & (1 << u) != 0 {
                cost += 1 + row.count_ones() as usize;
            } else {
                cost += (row & free).count_ones() as usize;
            }
        }
        cost
    }

    fn run(&mut self, depth: usize, cost: usize) -> Result<(), GraphError> {
        self.expansions += 1;
        if self.expansions > MAX_EXPANSIONS {
            return Err(GraphError::TooLarge(format!(
                "search exceeded {MAX_EXPANSIONS} expansions"
            )));
        }
        if cost + self.lower_bound(depth) >= self.best {
            return Ok(());
        }
        if depth == self.a.len() {
            self.best = self.best.min(cost + self.finish_cost());
            return Ok(());
        }
        let mut options: Vec<(usize, Option<usize>)> = (0..self.b.len())
            .filter(|&j| self.used & (1 << j) == 0 && self.compatible(depth, j))
            .map(|j| (self.edge_cost(depth, Some(j)), Some(j)))
            .collect();
        options.push((1 + self.edge_cost(depth, None), None));
        options.sort_by_key(|&(c, j)| (c, j.is_none()));
        for (step, j) in options {
            self.map.push(j);
            if let Some(j) = j {
                self.used |= 1 << j;
            }
            let r = self.run(depth + 1, cost + step);
            if let Some(j) = j {
                self.used &= !(1 << j);
            }
            self.map.pop();
            r?;
        }
        Ok(())
    }
}

/// Minimum number of node and edge insertions/deletions turning `a` into a
/// graph isomorphic to `b` under `mode`.
pub fn edit_distance(a: &EditGraph, b: &EditGraph, mode: NodeMatch) -> Result<usize, GraphError> {
    for g in [a, b] {
        if g.len() > MAX_GED_NODES {
            return Err(GraphError::TooLarge(format!(
                "{} nodes, limit {MAX_GED_NODES}",
                g.len()
            )));
        }
    }
    let mut search = Search {
        a,
        b,
        mode,
        map: Vec::with_capacity(a.len()),
        used: 0,
        best: a.len() + b.len() + a.edge_count() + b.edge_count() + 1,
        expansions: 0,
    };
    search.run(0, 0)?;
    Ok(search.best)
}
