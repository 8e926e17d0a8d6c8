//! Per-edge energy terms: shakiness, velocity and appearance, and their
//! weighted combination.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{ColorHistogram, DirectionSource, MotionLink, MotionTrace};

/// Shakiness assigned to links whose motion direction could not be estimated.
pub const MISSING_DIRECTION_COST: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Multiplier on shakiness when the direction is a FOE fallback.
    pub foe_penalty_c: f64,
    /// Desired flow magnitude between consecutive output frames.
    pub k_flow: f64,
}

impl CostWeights {
    /// Weights used for frame sampling when the epipole is available.
    pub fn sampling(k_flow: f64) -> Self {
        CostWeights {
            alpha: 1000.0,
            beta: 200.0,
            gamma: 3.0,
            foe_penalty_c: 4.0,
            k_flow,
        }
    }

    /// Weights used for panorama sampling; `gamma` scales the FOV term.
    pub fn panorama(k_flow: f64) -> Self {
        CostWeights {
            alpha: 1e7,
            beta: 5e6,
            gamma: 1.0,
            foe_penalty_c: 4.0,
            k_flow,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma, self.foe_penalty_c, self.k_flow];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cost weights must be finite and non-negative: {self:?}"
            )));
        }
        if self.foe_penalty_c < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "foe penalty must be at least 1, got {}",
                self.foe_penalty_c
            )));
        }
        Ok(())
    }

    /// Same weights with alpha, beta and gamma multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        CostWeights {
            alpha: self.alpha * s,
            beta: self.beta * s,
            gamma: self.gamma * s,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeCost {
    pub shakiness: f64,
    pub velocity: f64,
    pub appearance: f64,
    pub total: f64,
}

impl EdgeCost {
    pub fn combine(shakiness: f64, velocity: f64, appearance: f64, w: &CostWeights) -> Self {
        EdgeCost {
            shakiness,
            velocity,
            appearance,
            total: w.alpha * shakiness + w.beta * velocity + w.gamma * appearance,
        }
    }
}

/// Distance of the motion direction from the image center.
pub fn shakiness_cost(link: &MotionLink, w: &CostWeights) -> f64 {
    let norm = link.direction[0].hypot(link.direction[1]);
    match link.source {
        DirectionSource::Epipole => norm,
        DirectionSource::Foe => norm * w.foe_penalty_c,
        DirectionSource::Missing => MISSING_DIRECTION_COST,
    }
}

/// Squared deviation of the accumulated flow from the desired step.
pub fn velocity_cost(link: &MotionLink, w: &CostWeights) -> f64 {
    let d = link.flow_sum - w.k_flow;
    d * d
}

/// 1-D earth mover's distance with unit ground distance between adjacent
/// bins, i.e. the L1 distance between the cumulative distributions.
pub fn emd_1d(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut carry = 0.0;
    let mut work = 0.0;
    for (x, y) in a.iter().zip(b) {
        carry += x - y;
        work += carry.abs();
    }
    work
}

/// Sum of per-channel 1-D EMDs.
pub fn appearance_cost(h1: &ColorHistogram, h2: &ColorHistogram) -> f64 {
    (0..3).map(|c| emd_1d(h1.channel(c), h2.channel(c))).sum()
}

/// Cost of the link itself, without looking anything up.
pub fn link_cost(trace: &MotionTrace, link: &MotionLink, w: &CostWeights) -> EdgeCost {
    let appearance = match (trace.histogram(link.src), trace.histogram(link.dst)) {
        (Some(a), Some(b)) => appearance_cost(a, b),
        _ => 0.0,
    };
    EdgeCost::combine(shakiness_cost(link, w), velocity_cost(link, w), appearance, w)
}

pub fn edge_cost(trace: &MotionTrace, i: usize, j: usize, w: &CostWeights) -> Result<EdgeCost> {
    let link = trace.link(i, j).ok_or(Error::MissingLink { src: i, dst: j })?;
    Ok(link_cost(trace, link, w))
}

/// Desired per-step flow for a target speedup: `speedup` times the mean
/// consecutive-frame flow of the trace.
pub fn k_flow_for_speedup(trace: &MotionTrace, speedup: f64) -> f64 {
    speedup * trace.avg_flow()
}
