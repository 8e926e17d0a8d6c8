//! Second-order frame sampling. Nodes are frame pairs `(i, j)`; an edge
//! `(i, j) -> (j, l)` pays the first-order cost of `(j, l)` plus a penalty on
//! how far the motion direction moved between the two transitions.

use crate::cost::{link_cost, MISSING_DIRECTION_COST};
use crate::dag::{shortest_path, Solver, WeightedDag};
use crate::error::{Error, Result};
use crate::sampler::{GraphSpec, SamplingPlan};
use crate::trace::{MotionLink, MotionTrace};

/// Euclidean distance between the motion directions of two chained links.
pub fn second_order_cost(first: &MotionLink, second: &MotionLink) -> Result<f64> {
    if first.dst != second.src {
        return Err(Error::MiddleFrameMismatch {
            first_dst: first.dst,
            second_src: second.src,
        });
    }
    Ok(direction_change(first, second))
}

fn direction_change(first: &MotionLink, second: &MotionLink) -> f64 {
    if !first.has_direction() || !second.has_direction() {
        return MISSING_DIRECTION_COST;
    }
    (second.direction[0] - first.direction[0]).hypot(second.direction[1] - first.direction[1])
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SecondOrderOptions {
    /// Weight of the direction-change term; defaults to the shakiness weight.
    pub alpha2: Option<f64>,
    pub solver: Solver,
}

/// Pair-node graph. Nodes are the links with skip ≤ tau, numbered in
/// `(src, dst)` order, which is topological for pair-to-pair edges.
pub struct SecondOrderGraph<'a> {
    trace: &'a MotionTrace,
    spec: &'a GraphSpec,
    alpha2: f64,
    // node id -> link
    nodes: Vec<&'a MotionLink>,
    // first node id whose src is frame i; len n + 1
    first_of: Vec<usize>,
    node_totals: Vec<f64>,
}

impl<'a> SecondOrderGraph<'a> {
    pub fn build(trace: &'a MotionTrace, spec: &'a GraphSpec, alpha2: f64) -> Result<Self> {
        spec.check_trace(trace)?;
        if !(alpha2.is_finite() && alpha2 >= 0.0) {
            return Err(Error::InvalidArgument(format!("alpha2 must be non-negative, got {alpha2}")));
        }
        let mut nodes: Vec<&MotionLink> = Vec::new();
        let mut first_of = Vec::with_capacity(spec.n + 1);
        for i in 0..spec.n {
            first_of.push(nodes.len());
            nodes.extend(trace.links_from(i).iter().filter(|l| l.skip() <= spec.tau));
        }
        first_of.push(nodes.len());
        let node_totals = nodes.iter().map(|l| link_cost(trace, l, &spec.weights).total).collect();
        Ok(SecondOrderGraph {
            trace,
            spec,
            alpha2,
            nodes,
            first_of,
            node_totals,
        })
    }

    pub fn pair(&self, node: usize) -> (usize, usize) {
        let l = self.nodes[node];
        (l.src, l.dst)
    }

    pub fn edge_count(&self) -> usize {
        (0..self.nodes.len())
            .map(|u| self.first_of[self.nodes[u].dst + 1] - self.first_of[self.nodes[u].dst])
            .sum()
    }

    fn outgoing(&self, frame: usize) -> std::ops::Range<usize> {
        self.first_of[frame]..self.first_of[frame + 1]
    }

    fn transition_weight(&self, from: usize, to: usize) -> f64 {
        self.node_totals[to] + self.alpha2 * direction_change(self.nodes[from], self.nodes[to])
    }
}

impl WeightedDag for SecondOrderGraph<'_> {
    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn source_weight(&self, node: usize) -> Option<f64> {
        let l = self.nodes[node];
        self.spec.is_start(l.src).then(|| self.node_totals[node])
    }

    fn sink_weight(&self, node: usize) -> Option<f64> {
        self.spec.is_end(self.nodes[node].dst).then_some(0.0)
    }

    fn for_each_successor(&self, node: usize, f: &mut dyn FnMut(usize, f64)) {
        for v in self.outgoing(self.nodes[node].dst) {
            f(v, self.transition_weight(node, v));
        }
    }

    fn for_each_predecessor(&self, node: usize, f: &mut dyn FnMut(usize, f64)) {
        let mid = self.nodes[node].src;
        for h in mid.saturating_sub(self.spec.tau)..mid {
            let range = self.outgoing(h);
            let out = &self.nodes[range.clone()];
            if let Ok(k) = out.binary_search_by_key(&mid, |l| l.dst) {
                let u = range.start + k;
                f(u, self.transition_weight(u, node));
            }
        }
    }
}

pub fn solve_second_order(trace: &MotionTrace, spec: &GraphSpec) -> Result<SamplingPlan> {
    solve_second_order_with(trace, spec, SecondOrderOptions::default())
}

pub fn solve_second_order_with(
    trace: &MotionTrace,
    spec: &GraphSpec,
    opts: SecondOrderOptions,
) -> Result<SamplingPlan> {
    let alpha2 = opts.alpha2.unwrap_or(spec.weights.alpha);
    let graph = SecondOrderGraph::build(trace, spec, alpha2)?;
    let path = shortest_path(&graph, opts.solver)?;

    let mut selected = Vec::with_capacity(path.nodes.len() + 1);
    let mut transition_costs = Vec::with_capacity(path.nodes.len());
    let mut smoothness_costs = Vec::with_capacity(path.nodes.len());
    for (k, &node) in path.nodes.iter().enumerate() {
        let l = graph.nodes[node];
        if k == 0 {
            selected.push(l.src);
            smoothness_costs.push(0.0);
        } else {
            let prev = graph.nodes[path.nodes[k - 1]];
            smoothness_costs.push(alpha2 * direction_change(prev, l));
        }
        selected.push(l.dst);
        transition_costs.push(link_cost(graph.trace, l, &spec.weights));
    }
    Ok(SamplingPlan {
        video_id: trace.video_id().to_string(),
        selected,
        transition_costs,
        smoothness_costs,
        total_cost: path.cost,
        solver: opts.solver.into(),
    })
}
