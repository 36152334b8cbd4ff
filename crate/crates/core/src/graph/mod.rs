//! Sub-goal DAGs built from proposed paths, and the graph queries the teacher
//! needs: successors, discarded tasks and next tasks.

mod ged;
mod io;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symbolic::{SymbolicError, SymbolicState};

pub use ged::{edit_distance, graph_edit_distance, EditGraph, NodeMatch, MAX_GED_NODES};
pub use io::{parse_edge_list, to_edge_list};

pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("no paths to build a graph from")]
    NoPaths,
    #[error("no path from start to goal survives cycle removal and pruning")]
    NoGoalPath,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown edge {0}")]
    UnknownEdge(TaskEdge),
    #[error("graph contains a cycle through {0}")]
    Cyclic(String),
    #[error("graph too large for exact edit distance ({0})")]
    TooLarge(String),
    #[error("edge list line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

/// A sub-task: reach `dst` starting from a state satisfying `src`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaskEdge {
    pub src: NodeId,
    pub dst: NodeId,
}

impl TaskEdge {
    pub fn new(src: NodeId, dst: NodeId) -> Self {
        Self { src, dst }
    }
}

impl fmt::Display for TaskEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}->q{}", self.src, self.dst)
    }
}

/// Directed acyclic graph over symbolic states in which every node lies on
/// some start-to-goal path.
///
/// Node ids are dense and ordered by first appearance; the start node is
/// always id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgoalDag {
    nodes: Vec<SymbolicState>,
    out: Vec<Vec<NodeId>>,
    edges: BTreeSet<TaskEdge>,
    goal: NodeId,
}

impl SubgoalDag {
    /// Merge `paths` into a DAG. Each path's first element stands for
    /// `start` and its last for `goal`; identical interior states become one
    /// node. Edges are inserted path by path, position by position; a
    /// self-loop or an edge whose head already reaches its tail is skipped.
    /// Nodes that end up off every start-to-goal path are dropped.
    pub fn build(
        paths: &[Vec<SymbolicState>],
        start: &SymbolicState,
        goal: &SymbolicState,
    ) -> Result<Self, GraphError> {
        if paths.is_empty() {
            return Err(GraphError::NoPaths);
        }
        let mut nodes = vec![start.clone()];
        let mut index: BTreeMap<SymbolicState, NodeId> = BTreeMap::from([(start.clone(), 0)]);
        let mut intern = |s: &SymbolicState, nodes: &mut Vec<SymbolicState>| {
            *index.entry(s.clone()).or_insert_with(|| {
                nodes.push(s.clone());
                nodes.len() - 1
            })
        };
        let goal_id = intern(goal, &mut nodes);

        let mut out: Vec<Vec<NodeId>> = Vec::new();
        for path in paths {
            let last = path.len().saturating_sub(1);
            let ids: Vec<NodeId> = path
                .iter()
                .enumerate()
                .map(|(i, s)| match i {
                    0 => 0,
                    i if i == last => goal_id,
                    _ => intern(s, &mut nodes),
                })
                .collect();
            out.resize(nodes.len(), Vec::new());
            for w in ids.windows(2) {
                let (a, b) = (w[0], w[1]);
                if a == b || out[a].contains(&b) || reaches(&out, b, a) {
                    continue;
                }
                out[a].push(b);
            }
        }
        out.resize(nodes.len(), Vec::new());
        Self::prune(nodes, out, goal_id)
    }

    /// Assemble a DAG from explicit nodes and edges, e.g. an oracle graph.
    pub fn from_edges(
        nodes: Vec<SymbolicState>,
        edges: &[(NodeId, NodeId)],
        start: NodeId,
        goal: NodeId,
    ) -> Result<Self, GraphError> {
        let n = nodes.len();
        for &id in [start, goal].iter().chain(edges.iter().flat_map(|(a, b)| [a, b])) {
            if id >= n {
                return Err(GraphError::UnknownNode(id));
            }
        }
        // Move start to id 0.
        let mut order: Vec<NodeId> = std::iter::once(start)
            .chain((0..n).filter(|&i| i != start))
            .collect();
        let mut remap = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let nodes: Vec<SymbolicState> = order.drain(..).map(|i| nodes[i].clone()).collect();
        let mut out = vec![Vec::new(); n];
        for &(a, b) in edges {
            let (a, b) = (remap[a], remap[b]);
            if a == b {
                return Err(GraphError::Cyclic(nodes[a].to_string()));
            }
            if !out[a].contains(&b) {
                out[a].push(b);
            }
        }
        if let Some(v) = find_cycle(&out) {
            return Err(GraphError::Cyclic(nodes[v].to_string()));
        }
        Self::prune(nodes, out, remap[goal])
    }

    fn prune(
        nodes: Vec<SymbolicState>,
        out: Vec<Vec<NodeId>>,
        goal: NodeId,
    ) -> Result<Self, GraphError> {
        let n = nodes.len();
        let forward = reachable_from(&out, 0);
        let mut rev = vec![Vec::new(); n];
        for (a, succ) in out.iter().enumerate() {
            for &b in succ {
                rev[b].push(a);
            }
        }
        let backward = reachable_from(&rev, goal);
        if !forward[goal] {
            return Err(GraphError::NoGoalPath);
        }
        let keep: Vec<bool> = (0..n).map(|v| forward[v] && backward[v]).collect();
        let mut remap = vec![usize::MAX; n];
        let mut kept = Vec::new();
        for v in (0..n).filter(|&v| keep[v]) {
            remap[v] = kept.len();
            kept.push(nodes[v].clone());
        }
        let mut new_out = vec![Vec::new(); kept.len()];
        let mut edges = BTreeSet::new();
        for (a, succ) in out.iter().enumerate().filter(|(a, _)| keep[*a]) {
            for &b in succ.iter().filter(|&&b| keep[b]) {
                new_out[remap[a]].push(remap[b]);
                edges.insert(TaskEdge::new(remap[a], remap[b]));
            }
        }
        for succ in &mut new_out {
            succ.sort_unstable();
        }
        let dag = Self {
            nodes: kept,
            out: new_out,
            edges,
            goal: remap[goal],
        };
        debug_assert!(find_cycle(&dag.out).is_none());
        Ok(dag)
    }

    pub fn start(&self) -> NodeId {
        0
    }

    pub fn goal(&self) -> NodeId {
        self.goal
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[SymbolicState] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&SymbolicState, GraphError> {
        self.nodes.get(id).ok_or(GraphError::UnknownNode(id))
    }

    pub fn node_id(&self, state: &SymbolicState) -> Option<NodeId> {
        self.nodes.iter().position(|s| s == state)
    }

    pub fn edges(&self) -> impl Iterator<Item = TaskEdge> + '_ {
        self.edges.iter().copied()
    }

    pub fn contains_edge(&self, e: TaskEdge) -> bool {
        self.edges.contains(&e)
    }

    fn check_edge(&self, e: TaskEdge) -> Result<(), GraphError> {
        if self.contains_edge(e) {
            Ok(())
        } else {
            Err(GraphError::UnknownEdge(e))
        }
    }

    /// Out-neighbours of `v` in ascending id order.
    pub fn successors(&self, v: NodeId) -> Result<&[NodeId], GraphError> {
        self.out
            .get(v)
            .map(Vec::as_slice)
            .ok_or(GraphError::UnknownNode(v))
    }

    pub fn outgoing_tasks(&self, v: NodeId) -> Result<Vec<TaskEdge>, GraphError> {
        Ok(self
            .successors(v)?
            .iter()
            .map(|&d| TaskEdge::new(v, d))
            .collect())
    }

    pub fn reaches(&self, from: NodeId, to: NodeId) -> bool {
        reaches(&self.out, from, to)
    }

    /// Edges made redundant once `learned` converges: every start-to-goal
    /// path through such an edge arrives at `learned.dst` afterwards, so the
    /// learned policy already covers where it leads.
    pub fn discarded_tasks(&self, learned: TaskEdge) -> Result<BTreeSet<TaskEdge>, GraphError> {
        self.check_edge(learned)?;
        let p = learned.dst;
        // Nodes that can reach the goal without visiting p.
        let mut rev = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            if e.src != p && e.dst != p {
                rev[e.dst].push(e.src);
            }
        }
        let escapes = if self.goal == p {
            vec![false; self.nodes.len()]
        } else {
            reachable_from(&rev, self.goal)
        };
        Ok(self
            .edges
            .iter()
            .filter(|&&e| e != learned && (e.dst == p || !escapes[e.dst]))
            .copied()
            .collect())
    }

    /// Tasks to activate after `learned` converges: edges leaving its
    /// destination that are neither discarded nor already learned.
    pub fn next_tasks(
        &self,
        learned: TaskEdge,
        discarded: &BTreeSet<TaskEdge>,
        learned_set: &BTreeSet<TaskEdge>,
    ) -> Result<BTreeSet<TaskEdge>, GraphError> {
        self.check_edge(learned)?;
        Ok(self
            .outgoing_tasks(learned.dst)?
            .into_iter()
            .filter(|e| !discarded.contains(e) && !learned_set.contains(e))
            .collect())
    }

    /// Hop count from each node to the goal.
    pub fn distances_to_goal(&self) -> Vec<Option<usize>> {
        let mut rev = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            rev[e.dst].push(e.src);
        }
        let mut dist = vec![None; self.nodes.len()];
        dist[self.goal] = Some(0);
        let mut queue = VecDeque::from([self.goal]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap_or(0);
            for &u in &rev[v] {
                if dist[u].is_none() {
                    dist[u] = Some(d + 1);
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Nodes in an order where every edge points forward.
    pub fn topological_order(&self) -> Vec<NodeId> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        for e in &self.edges {
            indeg[e.dst] += 1;
        }
        let mut ready: VecDeque<NodeId> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_front() {
            order.push(v);
            for &w in &self.out[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.push_back(w);
                }
            }
        }
        order
    }

    /// `src -> dst` rendering with the node states.
    pub fn describe(&self, e: TaskEdge) -> String {
        format!("{} -> {}", self.nodes[e.src], self.nodes[e.dst])
    }

    /// Every start-to-goal path, as node sequences.
    pub fn paths(&self) -> Vec<Vec<NodeId>> {
        let mut all = Vec::new();
        let mut stack = vec![vec![0]];
        while let Some(path) = stack.pop() {
            let last = path[path.len() - 1];
            if last == self.goal {
                all.push(path);
                continue;
            }
            for &w in self.out[last].iter().rev() {
                let mut next = path.clone();
                next.push(w);
                stack.push(next);
            }
        }
        all
    }
}

fn reachable_from(adj: &[Vec<NodeId>], from: NodeId) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

fn reaches(adj: &[Vec<NodeId>], from: NodeId, to: NodeId) -> bool {
    reachable_from(adj, from)[to]
}

fn find_cycle(adj: &[Vec<NodeId>]) -> Option<NodeId> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark = vec![Mark::New; adj.len()];
    for root in 0..adj.len() {
        if mark[root] != Mark::New {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Open;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if let Some(&w) = adj[v].get(*i) {
                *i += 1;
                match mark[w] {
                    Mark::Open => return Some(w),
                    Mark::New => {
                        mark[w] = Mark::Open;
                        stack.push((w, 0));
                    }
                    Mark::Done => {}
                }
            } else {
                mark[v] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}
