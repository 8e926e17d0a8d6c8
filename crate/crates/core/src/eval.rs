//! Plan metrics: effective speedup, epipole jitter against a uniform
//! baseline, and crop size for panorama plans.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::uniform_plan;
use crate::trace::MotionTrace;

pub const DEFAULT_BASELINE_SKIP: usize = 10;

/// Below this fraction of frames able to reach the desired flow, a trace is
/// reported as flow-starved.
pub const FLOW_STARVED_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImprovementDenominator {
    #[default]
    Plan,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub baseline_skip: usize,
    pub denominator: ImprovementDenominator,
    /// Desired flow per output step and largest skip, used to detect traces
    /// where the target speed is out of reach.
    pub k_flow: f64,
    pub tau: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub frame_count: usize,
    pub selected_count: usize,
    pub median_skip: usize,
    pub jitter_mean: f64,
    pub baseline_jitter_mean: f64,
    /// Absent when the denominator jitter is zero and the two differ.
    pub jitter_improvement_pct: Option<f64>,
    pub improvement_denominator: ImprovementDenominator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fov_ratio_pct: Option<f64>,
    /// Fraction of frames from which some link within `tau` carries at least
    /// `k_flow` of flow.
    pub reachable_flow_fraction: f64,
    pub flow_starved: bool,
}

/// Metrics plus wall-clock timings, kept apart so reports compare cleanly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: EvalMetrics,
    pub timing_ms: BTreeMap<String, f64>,
}

/// Lower median of the gaps between consecutive selected frames.
pub fn median_skip(selected: &[usize]) -> Option<usize> {
    let mut gaps: Vec<usize> = selected.windows(2).map(|w| w[1] - w[0]).collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_unstable();
    Some(gaps[(gaps.len() - 1) / 2])
}

/// Motion direction of each transition of the selection, if known.
pub fn transition_directions(trace: &MotionTrace, selected: &[usize]) -> Vec<Option<[f64; 2]>> {
    selected
        .windows(2)
        .map(|w| trace.link(w[0], w[1]).filter(|l| l.has_direction()).map(|l| l.direction))
        .collect()
}

/// Mean change of the motion direction between consecutive transitions,
/// skipping pairs where either direction is unknown.
pub fn epipole_jitter(trace: &MotionTrace, selected: &[usize]) -> f64 {
    let dirs = transition_directions(trace, selected);
    let (mut sum, mut count) = (0.0, 0usize);
    for w in dirs.windows(2) {
        if let (Some(a), Some(b)) = (w[0], w[1]) {
            sum += (b[0] - a[0]).hypot(b[1] - a[1]);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

pub fn improvement_pct(baseline: f64, plan: f64, denom: ImprovementDenominator) -> Option<f64> {
    if baseline == plan {
        return Some(0.0);
    }
    let d = match denom {
        ImprovementDenominator::Plan => plan,
        ImprovementDenominator::Baseline => baseline,
    };
    (d != 0.0).then(|| 100.0 * (baseline - plan) / d)
}

pub fn reachable_flow_fraction(trace: &MotionTrace, k_flow: f64, tau: usize) -> f64 {
    let n = trace.len();
    if n < 2 {
        return 0.0;
    }
    let ok = (0..n - 1)
        .filter(|&i| {
            trace
                .links_from(i)
                .iter()
                .any(|l| l.skip() <= tau && l.flow_sum >= k_flow)
        })
        .count();
    ok as f64 / (n - 1) as f64
}

fn check_selection(trace: &MotionTrace, selected: &[usize]) -> Result<()> {
    if selected.len() < 2 {
        return Err(Error::InvalidArgument("a plan needs at least two frames to evaluate".into()));
    }
    for w in selected.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invariant(w[1], "selected frames are not strictly increasing"));
        }
    }
    let last = *selected.last().unwrap();
    if last >= trace.len() {
        return Err(Error::invariant(last, format!("frame beyond the trace's {} frames", trace.len())));
    }
    Ok(())
}

pub fn eval_selection(trace: &MotionTrace, selected: &[usize], opts: &EvalOptions) -> Result<EvalMetrics> {
    check_selection(trace, selected)?;
    let baseline = uniform_plan(trace.len(), opts.baseline_skip, 0)?.selected;
    let jitter = epipole_jitter(trace, selected);
    let base = epipole_jitter(trace, &baseline);
    let reach = reachable_flow_fraction(trace, opts.k_flow, opts.tau);
    Ok(EvalMetrics {
        frame_count: trace.len(),
        selected_count: selected.len(),
        median_skip: median_skip(selected).expect("at least two frames"),
        jitter_mean: jitter,
        baseline_jitter_mean: base,
        jitter_improvement_pct: improvement_pct(base, jitter, opts.denominator),
        improvement_denominator: opts.denominator,
        fov_ratio_pct: None,
        reachable_flow_fraction: reach,
        flow_starved: reach < FLOW_STARVED_FRACTION,
    })
}

/// Per-transition epipoles of the plan and the baseline, one row per output
/// step: `step,plan_frame,plan_x,plan_y,baseline_frame,baseline_x,baseline_y`.
pub fn write_epipole_csv(
    out: &mut dyn Write,
    trace: &MotionTrace,
    selected: &[usize],
    baseline_skip: usize,
) -> Result<()> {
    let baseline = uniform_plan(trace.len(), baseline_skip, 0)?.selected;
    let plan_dirs = transition_directions(trace, selected);
    let base_dirs = transition_directions(trace, &baseline);
    let io = |e| Error::io("<csv>", e);
    writeln!(out, "step,plan_frame,plan_x,plan_y,baseline_frame,baseline_x,baseline_y").map_err(io)?;
    let fmt = |d: Option<&Option<[f64; 2]>>| match d {
        Some(Some(p)) => (p[0].to_string(), p[1].to_string()),
        _ => (String::new(), String::new()),
    };
    for k in 0..plan_dirs.len().max(base_dirs.len()) {
        let (px, py) = fmt(plan_dirs.get(k));
        let (bx, by) = fmt(base_dirs.get(k));
        let pf = selected.get(k).map(|f| f.to_string()).unwrap_or_default();
        let bf = baseline.get(k).map(|f| f.to_string()).unwrap_or_default();
        writeln!(out, "{k},{pf},{px},{py},{bf},{bx},{by}").map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_examples() {
        assert_eq!(median_skip(&[0, 10, 20, 30]), Some(10));
        assert_eq!(median_skip(&[0, 17, 34, 38, 86]), Some(17));
        assert_eq!(median_skip(&[4]), None);
    }

    #[test]
    fn improvement_formula() {
        assert_eq!(improvement_pct(0.4, 0.1, ImprovementDenominator::Plan), Some(300.0));
        assert_eq!(improvement_pct(0.4, 0.1, ImprovementDenominator::Baseline), Some(75.0));
        assert_eq!(improvement_pct(0.2, 0.2, ImprovementDenominator::Plan), Some(0.0));
        assert_eq!(improvement_pct(0.0, 0.0, ImprovementDenominator::Plan), Some(0.0));
        assert_eq!(improvement_pct(0.4, 0.0, ImprovementDenominator::Plan), None);
    }
}
