//! Choosing which panorama candidates to keep: a shortest path over the
//! candidates ordered by center frame, trading camera shake and speed against
//! field of view.

use serde::{Deserialize, Serialize};

use super::candidate::PanoramaCandidate;
use crate::cost::{shakiness_cost, velocity_cost, CostWeights};
use crate::dag::{shortest_path, AdjacencyDag, Solver};
use crate::error::{Error, Result};
use crate::sampler::{DEFAULT_SKIP_WINDOW, DEFAULT_TAU};
use crate::trace::MotionTrace;

/// How candidate field of view enters the edge cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FovSign {
    /// `(FOV_max − FOV_p) / FOV_max`: wider panoramas cost less.
    #[default]
    Deficit,
    /// `FOV_p` in pixels, added as is.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanoramaSamplingOptions {
    pub tau: usize,
    pub d_start: usize,
    pub d_end: usize,
    pub fov_sign: FovSign,
    pub solver: Solver,
}

impl Default for PanoramaSamplingOptions {
    fn default() -> Self {
        PanoramaSamplingOptions {
            tau: DEFAULT_TAU,
            d_start: DEFAULT_SKIP_WINDOW,
            d_end: DEFAULT_SKIP_WINDOW,
            fov_sign: FovSign::Deficit,
            solver: Solver::DagDp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanoramaEdgeCost {
    pub shakiness: f64,
    pub velocity: f64,
    pub fov: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanoramaSelection {
    /// Indices into the candidate list.
    pub selected: Vec<usize>,
    pub transition_costs: Vec<PanoramaEdgeCost>,
    pub total_cost: f64,
}

pub fn fov_terms(fovs: &[f64], sign: FovSign) -> Vec<f64> {
    match sign {
        FovSign::Literal => fovs.to_vec(),
        FovSign::Deficit => {
            let max = fovs.iter().copied().fold(0.0, f64::max);
            fovs.iter()
                .map(|&f| if max > 0.0 { (max - f) / max } else { 0.0 })
                .collect()
        }
    }
}

/// Cost of moving from the panorama centered on `from` to the one on `to`,
/// charging the field-of-view term of the panorama being left.
pub fn panorama_edge_cost(
    trace: &MotionTrace,
    from: usize,
    to: usize,
    fov_term: f64,
    w: &CostWeights,
) -> Option<PanoramaEdgeCost> {
    let link = trace.link(from, to)?;
    let shakiness = shakiness_cost(link, w);
    let velocity = velocity_cost(link, w);
    Some(PanoramaEdgeCost {
        shakiness,
        velocity,
        fov: fov_term,
        total: w.alpha * shakiness + w.beta * velocity + w.gamma * fov_term,
    })
}

pub(crate) fn check_options(opts: &PanoramaSamplingOptions, w: &CostWeights) -> Result<()> {
    if opts.tau == 0 || opts.d_start == 0 || opts.d_end == 0 {
        return Err(Error::InvalidArgument(format!(
            "tau and skip windows must be positive: {opts:?}"
        )));
    }
    w.validate()
}

/// Candidate DAG over a single video's panoramas.
pub fn panorama_graph(
    candidates: &[PanoramaCandidate],
    trace: &MotionTrace,
    w: &CostWeights,
    opts: &PanoramaSamplingOptions,
) -> Result<AdjacencyDag> {
    check_options(opts, w)?;
    if candidates.is_empty() {
        return Err(Error::NoPath("no panorama candidates".into()));
    }
    for pair in candidates.windows(2) {
        if pair[1].center <= pair[0].center {
            return Err(Error::InvalidArgument(format!(
                "candidates must be ordered by strictly increasing center, got {} then {}",
                pair[0].center, pair[1].center
            )));
        }
    }
    let n = trace.len();
    let fov = fov_terms(&candidates.iter().map(|c| c.fov_pixels).collect::<Vec<_>>(), opts.fov_sign);
    let last = candidates.len() - 1;
    let mut g = AdjacencyDag::new(candidates.len());
    for (p, cp) in candidates.iter().enumerate() {
        if cp.center < opts.d_start || p == 0 {
            g.set_source(p, 0.0);
        }
        if cp.center + opts.d_end >= n || p == last {
            g.set_sink(p, 0.0);
        }
        for (q, cq) in candidates.iter().enumerate().skip(p + 1) {
            if cq.center - cp.center > opts.tau {
                break;
            }
            if let Some(c) = panorama_edge_cost(trace, cp.center, cq.center, fov[p], w) {
                g.add_edge(p, q, c.total);
            }
        }
    }
    Ok(g)
}

pub fn solve_panorama_sampling(
    candidates: &[PanoramaCandidate],
    trace: &MotionTrace,
    w: &CostWeights,
    opts: &PanoramaSamplingOptions,
) -> Result<PanoramaSelection> {
    let g = panorama_graph(candidates, trace, w, opts)?;
    let path = shortest_path(&g, opts.solver)?;
    let fov = fov_terms(&candidates.iter().map(|c| c.fov_pixels).collect::<Vec<_>>(), opts.fov_sign);
    let transition_costs = path
        .nodes
        .windows(2)
        .map(|e| {
            panorama_edge_cost(trace, candidates[e[0]].center, candidates[e[1]].center, fov[e[0]], w)
                .expect("selected edge exists")
        })
        .collect();
    Ok(PanoramaSelection {
        selected: path.nodes,
        transition_costs,
        total_cost: path.cost,
    })
}
