//! Independent reference implementations used by several test targets.

use std::collections::BTreeSet;

use lgts::graph::{EditGraph, GraphError, NodeMatch, SubgoalDag, TaskEdge};
use lgts::symbolic::SymbolicState;
use proptest::prelude::*;

pub fn edges(dag: &SubgoalDag) -> Vec<TaskEdge> {
    dag.edges().collect()
}

/// All start-to-goal node sequences, by plain DFS over the edge set.
pub fn all_paths(dag: &SubgoalDag) -> Vec<Vec<usize>> {
    let es = edges(dag);
    let mut out = Vec::new();
    let mut stack = vec![vec![dag.start()]];
    while let Some(p) = stack.pop() {
        let last = *p.last().unwrap();
        if last == dag.goal() {
            out.push(p);
            continue;
        }
        assert!(p.len() <= dag.node_count(), "path longer than node count: cycle");
        for e in es.iter().filter(|e| e.src == last) {
            let mut q = p.clone();
            q.push(e.dst);
            stack.push(q);
        }
    }
    out
}

/// `e` is redundant once `learned` converges iff every start-to-goal path
/// using `e` visits `learned.dst` after `e.src`.
pub fn oracle_discards(dag: &SubgoalDag, paths: &[Vec<usize>], learned: TaskEdge) -> BTreeSet<TaskEdge> {
    let p = learned.dst;
    edges(dag)
        .into_iter()
        .filter(|&e| e != learned)
        .filter(|&e| {
            paths.iter().all(|path| {
                match path.windows(2).position(|w| w[0] == e.src && w[1] == e.dst) {
                    Some(i) => path[i + 1..].contains(&p),
                    None => true,
                }
            })
        })
        .collect()
}

pub fn kahn_acyclic(dag: &SubgoalDag) -> bool {
    let n = dag.node_count();
    let es = edges(dag);
    let mut indeg = vec![0; n];
    for e in &es {
        indeg[e.dst] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = ready.pop() {
        seen += 1;
        for e in es.iter().filter(|e| e.src == v) {
            indeg[e.dst] -= 1;
            if indeg[e.dst] == 0 {
                ready.push(e.dst);
            }
        }
    }
    seen == n
}

pub fn path_sets() -> impl Strategy<Value = Vec<Vec<u8>>> {
    prop::collection::vec(prop::collection::vec(0u8..6, 0..6), 1..6)
}

fn state(name: &str) -> SymbolicState {
    format!("At({name})").parse().unwrap()
}

/// Build a graph from numbered path proposals and compare every query with
/// the enumeration oracles. `Ok(false)` when the proposals give no graph.
pub fn check_random_dag(raw: &[Vec<u8>], picks: &[bool]) -> Result<bool, String> {
    let (start, goal) = (state("S"), state("G"));
    let paths: Vec<Vec<SymbolicState>> = raw
        .iter()
        .map(|p| {
            let mut v = vec![start.clone()];
            v.extend(p.iter().map(|i| state(&format!("N{i}"))));
            v.push(goal.clone());
            v
        })
        .collect();
    let dag = match SubgoalDag::build(&paths, &start, &goal) {
        Ok(d) => d,
        Err(GraphError::NoGoalPath) => return Ok(false),
        Err(e) => return Err(e.to_string()),
    };
    let ensure = |ok: bool, what: String| if ok { Ok(()) } else { Err(what) };
    ensure(dag.node_count() <= 8, format!("{} nodes", dag.node_count()))?;
    ensure(kahn_acyclic(&dag), "cycle".into())?;

    let all = all_paths(&dag);
    ensure(!all.is_empty(), "no start-to-goal path".into())?;
    for v in 0..dag.node_count() {
        ensure(all.iter().any(|p| p.contains(&v)), format!("node {v} off every path"))?;
    }
    // Every edge joins states that are consecutive in some proposal.
    for e in edges(&dag) {
        let (a, b) = (dag.node(e.src).unwrap(), dag.node(e.dst).unwrap());
        let sound = paths.iter().any(|p| p.windows(2).any(|w| &w[0] == a && &w[1] == b));
        ensure(sound, format!("edge {e} not in any proposal"))?;
    }

    let es = edges(&dag);
    for (k, &learned) in es.iter().enumerate() {
        let got = dag.discarded_tasks(learned).map_err(|e| e.to_string())?;
        let want = oracle_discards(&dag, &all, learned);
        ensure(got == want, format!("learned {learned}: discarded {got:?}, oracle {want:?}"))?;

        let learned_set: BTreeSet<_> = es
            .iter()
            .enumerate()
            .filter(|(i, _)| picks[(i + k) % picks.len()])
            .map(|(_, &e)| e)
            .collect();
        let next = dag.next_tasks(learned, &got, &learned_set).map_err(|e| e.to_string())?;
        let expect: BTreeSet<_> = es
            .iter()
            .filter(|e| e.src == learned.dst && !got.contains(e) && !learned_set.contains(e))
            .copied()
            .collect();
        ensure(next == expect, format!("learned {learned}: next {next:?}, oracle {expect:?}"))?;
    }
    Ok(true)
}

/// Minimum cost over all partial injective maps from `a` to `b`.
pub fn brute_force(a: &EditGraph, b: &EditGraph, mode: NodeMatch) -> usize {
    fn go(
        a: &EditGraph,
        b: &EditGraph,
        mode: NodeMatch,
        map: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut usize,
    ) {
        let i = map.len();
        if i == a.len() {
            *best = (*best).min(cost(a, b, map));
            return;
        }
        map.push(None);
        go(a, b, mode, map, used, best);
        map.pop();
        for j in 0..b.len() {
            if used[j] || (mode == NodeMatch::Labels && a.class[i] != b.class[j]) {
                continue;
            }
            used[j] = true;
            map.push(Some(j));
            go(a, b, mode, map, used, best);
            map.pop();
            used[j] = false;
        }
    }
    let mut best = usize::MAX;
    go(a, b, mode, &mut Vec::new(), &mut vec![false; b.len()], &mut best);
    best
}

pub fn cost(a: &EditGraph, b: &EditGraph, map: &[Option<usize>]) -> usize {
    let mapped = map.iter().flatten().count();
    let mut c = (a.len() - mapped) + (b.len() - mapped);
    let mut kept = 0;
    for u in 0..a.len() {
        for v in 0..a.len() {
            if !a.has_edge(u, v) {
                continue;
            }
            match (map[u], map[v]) {
                (Some(x), Some(y)) if b.has_edge(x, y) => kept += 1,
                _ => c += 1,
            }
        }
    }
    c + b.edge_count() - kept
}

pub fn edit_graph() -> impl Strategy<Value = EditGraph> {
    (1usize..=6).prop_flat_map(|n| {
        (
            prop::collection::vec((0..n, 0..n), 0..=n * 2),
            prop::collection::vec(0u32..3, n),
        )
            .prop_map(move |(edges, class)| {
                let edges: Vec<_> = edges.into_iter().filter(|(a, b)| a != b).collect();
                EditGraph::new(n, &edges, class)
            })
    })
}

pub const STATES: [&str; 9] = [
    "At(OutsideRoom)",
    "Holding(Key_1)",
    "Holding(Key_2)",
    "Unlocked(Door)",
    "At(Green_Goal)",
    "Holding(Key_1) & Unlocked(Door)",
    "At(Lava)",
    "Holding(Banana)",
    "Flying(Key_1)",
];

/// A numbered state list, usually pinned to the initial and goal states so
/// that a good share of lists can pass validation.
pub fn list() -> impl Strategy<Value = (Vec<usize>, bool)> {
    (
        prop::bool::weighted(0.8),
        prop::collection::vec(0..STATES.len(), 0..4),
        prop::bool::weighted(0.8),
        any::<bool>(),
    )
        .prop_map(|(pin_start, middle, pin_goal, arrow)| {
            let mut items = Vec::new();
            if pin_start {
                items.push(0);
            }
            items.extend(middle);
            if pin_goal {
                items.push(4);
            }
            (items, arrow)
        })
}

pub fn render(lists: &[(Vec<usize>, bool)], noise: &str) -> String {
    let mut out = String::from(noise);
    out.push('\n');
    for (i, (items, arrow)) in lists.iter().enumerate() {
        if *arrow {
            let parts: Vec<&str> = items.iter().map(|&k| STATES[k]).collect();
            out.push_str(&format!("{}. {}\n", i + 1, parts.join(" -> ")));
        } else {
            out.push_str(&format!("Path {}:\n", i + 1));
            for (j, &k) in items.iter().enumerate() {
                out.push_str(&format!("{}. {}\n", j + 1, STATES[k]));
            }
            out.push('\n');
        }
    }
    out
}

