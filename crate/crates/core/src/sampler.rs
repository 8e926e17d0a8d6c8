//! First-order frame sampling: one node per frame, one edge per allowed skip,
//! and the minimum-energy frame sequence between the start and end windows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{link_cost, CostWeights, EdgeCost};
use crate::dag::{shortest_path, Solver, WeightedDag};
use crate::error::{Error, Result};
use crate::trace::MotionTrace;

pub const DEFAULT_TAU: usize = 100;
pub const DEFAULT_SKIP_WINDOW: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n: usize,
    pub tau: usize,
    pub d_start: usize,
    pub d_end: usize,
    pub weights: CostWeights,
}

impl GraphSpec {
    pub fn new(n: usize, tau: usize, d_start: usize, d_end: usize, weights: CostWeights) -> Result<Self> {
        let spec = GraphSpec {
            n,
            tau,
            d_start,
            d_end,
            weights,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Like [`GraphSpec::new`] but clamps `tau` and the skip windows to what
    /// a trace of `n` frames admits.
    pub fn clamped(n: usize, tau: usize, d_start: usize, d_end: usize, weights: CostWeights) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 frames, got {n}")));
        }
        Self::new(
            n,
            tau.clamp(1, n - 1),
            d_start.clamp(1, n),
            d_end.clamp(1, n),
            weights,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.tau && self.tau < self.n) {
            return Err(Error::InvalidArgument(format!(
                "tau must satisfy 1 <= tau < n, got tau={} n={}",
                self.tau, self.n
            )));
        }
        if !(1..=self.n).contains(&self.d_start) || !(1..=self.n).contains(&self.d_end) {
            return Err(Error::InvalidArgument(format!(
                "skip windows must lie in [1, n], got d_start={} d_end={} n={}",
                self.d_start, self.d_end, self.n
            )));
        }
        self.weights.validate()
    }

    pub fn is_start(&self, frame: usize) -> bool {
        frame < self.d_start
    }

    pub fn is_end(&self, frame: usize) -> bool {
        frame + self.d_end >= self.n
    }

    pub(crate) fn check_trace(&self, trace: &MotionTrace) -> Result<()> {
        self.validate()?;
        if trace.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "graph spec is for {} frames but trace has {}",
                self.n,
                trace.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanSolver {
    DagDp,
    Dijkstra,
    Uniform,
}

impl From<Solver> for PlanSolver {
    fn from(s: Solver) -> Self {
        match s {
            Solver::DagDp => PlanSolver::DagDp,
            Solver::Dijkstra => PlanSolver::Dijkstra,
        }
    }
}

/// Selected frames and what each transition between them costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub video_id: String,
    pub selected: Vec<usize>,
    pub transition_costs: Vec<EdgeCost>,
    /// Weighted epipole-change term charged on each transition (second-order
    /// plans only; the first transition pays none).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub smoothness_costs: Vec<f64>,
    pub total_cost: f64,
    pub solver: PlanSolver,
}

impl SamplingPlan {
    pub fn gaps(&self) -> impl Iterator<Item = usize> + '_ {
        self.selected.windows(2).map(|w| w[1] - w[0])
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Sum of the per-transition costs.
    pub fn recomputed_total(&self) -> f64 {
        self.transition_costs.iter().map(|c| c.total).sum::<f64>() + self.smoothness_costs.iter().sum::<f64>()
    }

    /// Checks the structural plan invariants against a graph spec.
    pub fn check(&self, spec: &GraphSpec) -> Result<()> {
        let first = *self.selected.first().ok_or_else(|| Error::invariant(0, "plan is empty"))?;
        let last = *self.selected.last().unwrap();
        if !spec.is_start(first) {
            return Err(Error::invariant(first, "first selected frame is outside the start window"));
        }
        if !spec.is_end(last) {
            return Err(Error::invariant(last, "last selected frame is outside the end window"));
        }
        for w in self.selected.windows(2) {
            if w[1] <= w[0] || w[1] - w[0] > spec.tau {
                return Err(Error::invariant(w[0], format!("gap {} -> {} violates tau", w[0], w[1])));
            }
        }
        if self.transition_costs.len() + 1 != self.selected.len() {
            return Err(Error::invariant(first, "transition cost count does not match plan"));
        }
        let sum = self.recomputed_total();
        if (sum - self.total_cost).abs() > 1e-9 * self.total_cost.abs().max(1.0) {
            return Err(Error::invariant(
                first,
                format!("total cost {} differs from transition sum {sum}", self.total_cost),
            ));
        }
        Ok(())
    }
}

/// First-order graph with edge totals precomputed densely: slot
/// `i * tau + (k - 1)` holds the edge `i -> i + k` (infinite when absent).
pub struct FirstOrderGraph<'a> {
    spec: &'a GraphSpec,
    edge_totals: Vec<f64>,
}

impl<'a> FirstOrderGraph<'a> {
    pub fn build(trace: &MotionTrace, spec: &'a GraphSpec) -> Result<Self> {
        spec.check_trace(trace)?;
        let tau = spec.tau;
        let mut edge_totals = vec![f64::INFINITY; spec.n * tau];
        edge_totals.par_chunks_mut(tau).enumerate().for_each(|(i, row)| {
            for l in trace.links_from(i) {
                let k = l.skip();
                if k <= tau {
                    row[k - 1] = link_cost(trace, l, &spec.weights).total;
                }
            }
        });
        Ok(FirstOrderGraph { spec, edge_totals })
    }

    pub fn edge_total(&self, i: usize, j: usize) -> Option<f64> {
        if j <= i || j - i > self.spec.tau || j >= self.spec.n {
            return None;
        }
        let w = self.edge_totals[i * self.spec.tau + (j - i - 1)];
        w.is_finite().then_some(w)
    }

    pub fn edge_count(&self) -> usize {
        self.edge_totals.iter().filter(|w| w.is_finite()).count()
    }
}

impl WeightedDag for FirstOrderGraph<'_> {
    fn node_count(&self) -> usize {
        self.spec.n
    }

    fn source_weight(&self, node: usize) -> Option<f64> {
        self.spec.is_start(node).then_some(0.0)
    }

    fn sink_weight(&self, node: usize) -> Option<f64> {
        self.spec.is_end(node).then_some(0.0)
    }

    fn for_each_successor(&self, node: usize, f: &mut dyn FnMut(usize, f64)) {
        let tau = self.spec.tau;
        let row = &self.edge_totals[node * tau..(node + 1) * tau];
        for (k, &w) in row.iter().enumerate() {
            let v = node + k + 1;
            if v >= self.spec.n {
                break;
            }
            if w.is_finite() {
                f(v, w);
            }
        }
    }

    fn for_each_predecessor(&self, node: usize, f: &mut dyn FnMut(usize, f64)) {
        let tau = self.spec.tau;
        for u in node.saturating_sub(tau)..node {
            let w = self.edge_totals[u * tau + (node - u - 1)];
            if w.is_finite() {
                f(u, w);
            }
        }
    }
}

pub fn solve_first_order(trace: &MotionTrace, spec: &GraphSpec) -> Result<SamplingPlan> {
    solve_first_order_with(trace, spec, Solver::DagDp)
}

pub fn solve_first_order_with(trace: &MotionTrace, spec: &GraphSpec, solver: Solver) -> Result<SamplingPlan> {
    let graph = FirstOrderGraph::build(trace, spec)?;
    let path = shortest_path(&graph, solver)?;
    let transition_costs = path
        .nodes
        .windows(2)
        .map(|w| {
            let link = trace.link(w[0], w[1]).expect("solver only follows existing links");
            link_cost(trace, link, &spec.weights)
        })
        .collect();
    Ok(SamplingPlan {
        video_id: trace.video_id().to_string(),
        selected: path.nodes,
        transition_costs,
        smoothness_costs: Vec::new(),
        total_cost: path.cost,
        solver: solver.into(),
    })
}

/// Naive fast-forward: every `skip`-th frame starting at `offset`.
pub fn uniform_plan(n: usize, skip: usize, offset: usize) -> Result<SamplingPlan> {
    if skip == 0 {
        return Err(Error::InvalidArgument("uniform skip must be at least 1".into()));
    }
    Ok(SamplingPlan {
        video_id: String::new(),
        selected: (offset..n).step_by(skip).collect(),
        transition_costs: Vec::new(),
        smoothness_costs: Vec::new(),
        total_cost: 0.0,
        solver: PlanSolver::Uniform,
    })
}

/// [`uniform_plan`] with transition costs filled in from the trace. If any
/// transition has no link the costs are left empty.
pub fn uniform_plan_for_trace(
    trace: &MotionTrace,
    skip: usize,
    offset: usize,
    weights: &CostWeights,
) -> Result<SamplingPlan> {
    let mut plan = uniform_plan(trace.len(), skip, offset)?;
    plan.video_id = trace.video_id().to_string();
    let costs: Option<Vec<EdgeCost>> = plan
        .selected
        .windows(2)
        .map(|w| trace.link(w[0], w[1]).map(|l| link_cost(trace, l, weights)))
        .collect();
    if let Some(costs) = costs {
        plan.total_cost = costs.iter().map(|c| c.total).sum();
        plan.transition_costs = costs;
    }
    Ok(plan)
}
