//! Shortest source-to-sink paths over forward-only weighted DAGs.
//!
//! Nodes are numbered in topological order: every edge goes from a lower to
//! a higher id. A virtual source connects to some nodes and some nodes connect
//! to a virtual sink. Among all minimum-cost paths the one whose node sequence
//! is lexicographically smallest is returned (a path that stops earlier is
//! smaller than any extension of it).
//!
//! Both solvers compute the same cost-to-sink table, `cost[u] = min(sink(u),
//! min_v w(u, v) + cost[v])`, so their path costs agree bit for bit: the DAG
//! dynamic program relaxes nodes in reverse topological order, Dijkstra settles
//! them from the sink outward over reversed edges.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A forward-only DAG whose edges are enumerated on demand.
pub trait WeightedDag {
    fn node_count(&self) -> usize;

    /// Weight of the edge from the virtual source, if there is one.
    fn source_weight(&self, node: usize) -> Option<f64>;

    /// Weight of the edge into the virtual sink, if there is one.
    fn sink_weight(&self, node: usize) -> Option<f64>;

    /// Calls `f(v, w)` for every edge `node -> v`; `v > node` always.
    fn for_each_successor(&self, node: usize, f: &mut dyn FnMut(usize, f64));

    /// Calls `f(u, w)` for every edge `u -> node`; `u < node` always.
    fn for_each_predecessor(&self, node: usize, f: &mut dyn FnMut(usize, f64));
}

/// Explicit adjacency-list DAG, for graphs small enough to materialize.
#[derive(Debug, Clone, Default)]
pub struct AdjacencyDag {
    succ: Vec<Vec<(usize, f64)>>,
    pred: Vec<Vec<(usize, f64)>>,
    source: Vec<Option<f64>>,
    sink: Vec<Option<f64>>,
}

impl AdjacencyDag {
    pub fn new(n: usize) -> Self {
        AdjacencyDag {
            succ: vec![Vec::new(); n],
            pred: vec![Vec::new(); n],
            source: vec![None; n],
            sink: vec![None; n],
        }
    }

    /// Adds `u -> v`. Panics unless `u < v`.
    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) {
        assert!(u < v, "edge {u} -> {v} is not forward");
        self.succ[u].push((v, w));
        self.pred[v].push((u, w));
    }

    pub fn set_source(&mut self, v: usize, w: f64) {
        self.source[v] = Some(w);
    }

    pub fn set_sink(&mut self, u: usize, w: f64) {
        self.sink[u] = Some(w);
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn edge_weight(&self, u: usize, v: usize) -> Option<f64> {
        self.succ.get(u)?.iter().find(|e| e.0 == v).map(|e| e.1)
    }
}

impl WeightedDag for AdjacencyDag {
    fn node_count(&self) -> usize {
        self.succ.len()
    }

    fn source_weight(&self, node: usize) -> Option<f64> {
        self.source[node]
    }

    fn sink_weight(&self, node: usize) -> Option<f64> {
        self.sink[node]
    }

    fn for_each_successor(&self, node: usize, f: &mut dyn FnMut(usize, f64)) {
        for &(v, w) in &self.succ[node] {
            f(v, w);
        }
    }

    fn for_each_predecessor(&self, node: usize, f: &mut dyn FnMut(usize, f64)) {
        for &(u, w) in &self.pred[node] {
            f(u, w);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Relaxation in reverse topological order, O(V + E).
    #[default]
    DagDp,
    Dijkstra,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPath {
    pub nodes: Vec<usize>,
    pub cost: f64,
}

pub fn shortest_path<G: WeightedDag + ?Sized>(graph: &G, solver: Solver) -> Result<ShortestPath> {
    let cost = match solver {
        Solver::DagDp => cost_to_sink_dp(graph),
        Solver::Dijkstra => cost_to_sink_dijkstra(graph),
    };
    trace_path(graph, &cost)
}

fn cost_to_sink_dp<G: WeightedDag + ?Sized>(graph: &G) -> Vec<f64> {
    let n = graph.node_count();
    let mut cost = vec![f64::INFINITY; n];
    for u in (0..n).rev() {
        let mut best = graph.sink_weight(u).unwrap_or(f64::INFINITY);
        graph.for_each_successor(u, &mut |v, w| {
            debug_assert!(v > u, "edge {u} -> {v} is not forward");
            let c = w + cost[v];
            if c < best {
                best = c;
            }
        });
        cost[u] = best;
    }
    cost
}

#[derive(Debug, PartialEq)]
struct Queued {
    cost: f64,
    node: usize,
}

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert so the cheapest node pops first.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn cost_to_sink_dijkstra<G: WeightedDag + ?Sized>(graph: &G) -> Vec<f64> {
    let n = graph.node_count();
    let mut cost = vec![f64::INFINITY; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    for u in 0..n {
        if let Some(w) = graph.sink_weight(u) {
            cost[u] = w;
            heap.push(Queued { cost: w, node: u });
        }
    }
    while let Some(Queued { cost: c, node: v }) = heap.pop() {
        if settled[v] || c > cost[v] {
            continue;
        }
        settled[v] = true;
        graph.for_each_predecessor(v, &mut |u, w| {
            debug_assert!(u < v, "edge {u} -> {v} is not forward");
            let cand = w + c;
            if !settled[u] && cand < cost[u] {
                cost[u] = cand;
                heap.push(Queued { cost: cand, node: u });
            }
        });
    }
    cost
}

/// Walks forward from the source, always taking the smallest next node that
/// stays on an optimal path.
fn trace_path<G: WeightedDag + ?Sized>(graph: &G, cost: &[f64]) -> Result<ShortestPath> {
    let n = graph.node_count();
    let mut best = f64::INFINITY;
    let mut first = None;
    for v in 0..n {
        if let Some(w) = graph.source_weight(v) {
            let c = w + cost[v];
            if c < best {
                best = c;
                first = Some(v);
            }
        }
    }
    let Some(mut u) = first else {
        return Err(Error::NoPath(if n == 0 {
            "graph is empty".into()
        } else {
            "no node reachable from the source reaches the sink".into()
        }));
    };
    if !best.is_finite() {
        return Err(Error::NoPath("every source-to-sink path has infinite cost".into()));
    }

    let mut nodes = vec![u];
    loop {
        let target = cost[u];
        if graph.sink_weight(u) == Some(target) {
            break;
        }
        let mut next: Option<usize> = None;
        graph.for_each_successor(u, &mut |v, w| {
            if w + cost[v] == target && next.is_none_or(|cur| v < cur) {
                next = Some(v);
            }
        });
        u = next.expect("cost-to-sink table is consistent with the graph");
        nodes.push(u);
    }
    Ok(ShortestPath { nodes, cost: best })
}
