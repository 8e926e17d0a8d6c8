//! Several videos of the same route or scene: frame correspondences between
//! videos, panoramas that mix frames from all of them, and joint sampling
//! that may switch between videos at a price.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostWeights;
use crate::dag::{shortest_path, AdjacencyDag};
use crate::error::{Error, Result};
use crate::panorama::align::align_rigid;
use crate::panorama::candidate::{build_candidate_in, Member, PanoramaCandidate};
use crate::panorama::central::select_central_frames;
use crate::panorama::geometry::chain_homography;
use crate::panorama::plan::{stabilize, PanoramaConfig, PanoramaPlan};
use crate::panorama::sampling::{check_options, fov_terms, panorama_edge_cost, PanoramaEdgeCost, PanoramaSamplingOptions};
use crate::trace::{normalize_homography, MotionTrace};

/// Fewest matched points for two frames to count as overlapping.
pub const MIN_MATCH_COUNT: u32 = 10;
pub const DEFAULT_CROSS_MULT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawMatch {
    pub fa: usize,
    pub fb: usize,
    pub count: u32,
    /// Row-major homography taking frame `fb` of video `b` into frame `fa`
    /// of video `a`.
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub h: Option<[f64; 9]>,
}

/// Candidate matches from video `a` into video `b`, before pruning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCorrespondence {
    pub a: usize,
    pub b: usize,
    pub matches: Vec<RawMatch>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum CorrespondenceFile {
    One(RawCorrespondence),
    Many(Vec<RawCorrespondence>),
}

/// Reads a correspondence file holding one video pair or a list of them.
pub fn load_correspondences(path: &Path) -> Result<Vec<RawCorrespondence>> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_correspondences(&s)
}

pub fn parse_correspondences(s: &str) -> Result<Vec<RawCorrespondence>> {
    Ok(match serde_json::from_str::<CorrespondenceFile>(s)? {
        CorrespondenceFile::One(c) => vec![c],
        CorrespondenceFile::Many(v) => v,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceEntry {
    pub fb: usize,
    pub count: u32,
    pub h: Option<Matrix3<f64>>,
}

/// Retained frame matches per ordered video pair `(a, b)`, keyed by the
/// frame of `a`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrespondenceTable {
    pairs: BTreeMap<(usize, usize), BTreeMap<usize, CorrespondenceEntry>>,
}

impl CorrespondenceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.values().all(BTreeMap::is_empty)
    }

    pub fn get(&self, a: usize, b: usize, fa: usize) -> Option<&CorrespondenceEntry> {
        self.pairs.get(&(a, b))?.get(&fa)
    }

    pub fn pair(&self, a: usize, b: usize) -> Option<&BTreeMap<usize, CorrespondenceEntry>> {
        self.pairs.get(&(a, b))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&(usize, usize), &BTreeMap<usize, CorrespondenceEntry>)> {
        self.pairs.iter()
    }

    /// Count threshold and temporal monotonicity of every retained entry.
    pub fn check(&self) -> Result<()> {
        for (&(a, b), map) in &self.pairs {
            let mut last = None;
            for (&fa, e) in map {
                if e.count < MIN_MATCH_COUNT {
                    return Err(Error::invariant(fa, format!("match {a}->{b} kept with {} points", e.count)));
                }
                if last.is_some_and(|l| e.fb < l) {
                    return Err(Error::invariant(fa, format!("match {a}->{b} breaks temporal order")));
                }
                last = Some(e.fb);
            }
        }
        Ok(())
    }
}

/// Best match per frame of `a` (most points, then the earlier frame of `b`),
/// minus weak matches and matches that would run backwards in time.
pub fn finalize_pair(raw: &RawCorrespondence) -> BTreeMap<usize, CorrespondenceEntry> {
    let mut best: BTreeMap<usize, &RawMatch> = BTreeMap::new();
    for m in &raw.matches {
        best.entry(m.fa)
            .and_modify(|cur| {
                if m.count > cur.count || (m.count == cur.count && m.fb < cur.fb) {
                    *cur = m;
                }
            })
            .or_insert(m);
    }
    let mut out = BTreeMap::new();
    let mut last_fb = None;
    for (fa, m) in best {
        if m.count < MIN_MATCH_COUNT || last_fb.is_some_and(|l| m.fb < l) {
            continue;
        }
        last_fb = Some(m.fb);
        out.insert(
            fa,
            CorrespondenceEntry {
                fb: m.fb,
                count: m.count,
                h: m.h.and_then(|h| normalize_homography(&Matrix3::from_row_slice(&h))),
            },
        );
    }
    out
}

pub fn finalize_correspondence(raw: &[RawCorrespondence]) -> CorrespondenceTable {
    let mut merged: BTreeMap<(usize, usize), RawCorrespondence> = BTreeMap::new();
    for r in raw {
        merged
            .entry((r.a, r.b))
            .or_insert_with(|| RawCorrespondence {
                a: r.a,
                b: r.b,
                matches: Vec::new(),
            })
            .matches
            .extend(r.matches.iter().cloned());
    }
    let pairs = merged
        .into_par_iter()
        .map(|(k, r)| (k, finalize_pair(&r)))
        .collect();
    CorrespondenceTable { pairs }
}

fn check_videos(traces: &[MotionTrace]) -> Result<(u32, u32)> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidArgument("at least one video is required".into()))?;
    let size = first.frame_size();
    if let Some(t) = traces.iter().find(|t| t.frame_size() != size) {
        return Err(Error::InvalidArgument(format!(
            "video {} has frame size {:?}, expected {size:?}",
            t.video_id(),
            t.frame_size()
        )));
    }
    Ok(size)
}

/// Adds to `base` the frames of other videos that correspond to its members,
/// warped through the member into the center.
pub fn extend_candidate(base: PanoramaCandidate, video_count: usize, table: &CorrespondenceTable) -> Result<PanoramaCandidate> {
    let mut seen: HashSet<(usize, usize)> = base.members.iter().map(|m| (m.video, m.frame)).collect();
    let mut members = base.members.clone();
    for m in &base.members {
        for u in (0..video_count).filter(|&u| u != base.video) {
            let Some(e) = table.get(base.video, u, m.frame) else {
                continue;
            };
            let Some(h) = e.h else {
                log::debug!("no homography for match {}:{} -> {u}:{}", base.video, m.frame, e.fb);
                continue;
            };
            let Some(warp) = normalize_homography(&(m.warp * h)) else {
                continue;
            };
            if seen.insert((u, e.fb)) {
                members.push(Member {
                    video: u,
                    frame: e.fb,
                    warp,
                    width: m.width,
                    height: m.height,
                });
            }
        }
    }
    if members.len() == base.members.len() {
        return Ok(base);
    }
    PanoramaCandidate::from_members(base.video, base.center, members)
}

/// Candidates of every video, centered on each video's own central frames.
pub fn build_multi_candidates(
    traces: &[MotionTrace],
    table: &CorrespondenceTable,
    omega: usize,
) -> Result<Vec<PanoramaCandidate>> {
    check_videos(traces)?;
    let mut out = Vec::new();
    for (v, trace) in traces.iter().enumerate() {
        let centers = select_central_frames(trace, omega)?;
        let cands = centers
            .par_iter()
            .map(|&c| extend_candidate(build_candidate_in(trace, v, c, omega)?, traces.len(), table))
            .collect::<Result<Vec<_>>>()?;
        out.extend(cands);
    }
    Ok(out)
}

/// How frames of different videos are placed on one time axis, in frames of
/// the first video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timeline {
    /// Videos were shot simultaneously; timestamps are comparable.
    #[default]
    Synchronized,
    /// Same route at different times; frames map through correspondences
    /// into the first video.
    Reference,
}

fn interpolate(knots: &[(f64, f64)], x: f64) -> f64 {
    let k = knots.partition_point(|p| p.0 <= x);
    if k == 0 {
        return knots[0].1 + (x - knots[0].0);
    }
    if k == knots.len() {
        let (x0, y0) = knots[k - 1];
        return y0 + (x - x0);
    }
    let ((x0, y0), (x1, y1)) = (knots[k - 1], knots[k]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Position on the shared time axis of frame `frame` of video `video`.
pub fn timeline_positions(
    traces: &[MotionTrace],
    table: &CorrespondenceTable,
    timeline: Timeline,
) -> Result<Vec<Vec<f64>>> {
    let fps = traces.first().map_or(0.0, MotionTrace::fps);
    traces
        .iter()
        .enumerate()
        .map(|(v, t)| match timeline {
            Timeline::Synchronized => Ok(t.frames().iter().map(|f| f.timestamp_ms * fps / 1000.0).collect()),
            Timeline::Reference if v == 0 => Ok((0..t.len()).map(|f| f as f64).collect()),
            Timeline::Reference => {
                let knots = table
                    .pair(v, 0)
                    .map(|m| m.iter().map(|(&fa, e)| (fa as f64, e.fb as f64)).collect::<Vec<_>>())
                    .unwrap_or_default();
                if knots.is_empty() {
                    return Err(Error::InvalidArgument(format!(
                        "video {} has no correspondences into the reference video",
                        t.video_id()
                    )));
                }
                Ok((0..t.len()).map(|f| interpolate(&knots, f as f64)).collect())
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiOptions {
    pub sampling: PanoramaSamplingOptions,
    /// Cross-video edges pay this multiple of their own cost on top;
    /// infinity forbids switching.
    pub cross_mult: f64,
    pub timeline: Timeline,
}

impl Default for MultiOptions {
    fn default() -> Self {
        MultiOptions {
            sampling: PanoramaSamplingOptions::default(),
            cross_mult: DEFAULT_CROSS_MULT,
            timeline: Timeline::Synchronized,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiSelection {
    /// Indices into the candidate list, in timeline order.
    pub selected: Vec<usize>,
    pub transition_costs: Vec<PanoramaEdgeCost>,
    /// Switching penalty paid on each transition (zero within a video).
    pub cross_penalties: Vec<f64>,
    pub total_cost: f64,
}

impl MultiSelection {
    pub fn switches(&self, candidates: &[PanoramaCandidate]) -> usize {
        self.selected
            .windows(2)
            .filter(|w| candidates[w[0]].video != candidates[w[1]].video)
            .count()
    }
}

struct MultiGraph {
    dag: AdjacencyDag,
    // node id -> candidate index
    order: Vec<usize>,
}

/// Cost of the transition `p -> q` before any switching penalty, and whether
/// it crosses videos.
fn transition(
    p: &PanoramaCandidate,
    q: &PanoramaCandidate,
    fov_p: f64,
    traces: &[MotionTrace],
    table: &CorrespondenceTable,
    w: &CostWeights,
) -> Option<PanoramaEdgeCost> {
    if p.video == q.video {
        return panorama_edge_cost(&traces[p.video], p.center, q.center, fov_p, w);
    }
    let via_q = table
        .get(p.video, q.video, p.center)
        .filter(|e| e.fb < q.center)
        .and_then(|e| panorama_edge_cost(&traces[q.video], e.fb, q.center, fov_p, w));
    via_q.or_else(|| {
        table
            .get(q.video, p.video, q.center)
            .filter(|e| p.center < e.fb)
            .and_then(|e| panorama_edge_cost(&traces[p.video], p.center, e.fb, fov_p, w))
    })
}

fn cross_penalty(pre: f64, mult: f64) -> f64 {
    mult * pre
}

fn multi_graph(
    candidates: &[PanoramaCandidate],
    traces: &[MotionTrace],
    table: &CorrespondenceTable,
    w: &CostWeights,
    opts: &MultiOptions,
) -> Result<(MultiGraph, Vec<f64>)> {
    check_options(&opts.sampling, w)?;
    if !(opts.cross_mult >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cross-video multiplier must be non-negative, got {}",
            opts.cross_mult
        )));
    }
    if candidates.is_empty() {
        return Err(Error::NoPath("no panorama candidates".into()));
    }
    if let Some(c) = candidates.iter().find(|c| c.video >= traces.len() || c.center >= traces[c.video].len()) {
        return Err(Error::InvalidArgument(format!(
            "candidate {}:{} does not belong to any video",
            c.video, c.center
        )));
    }
    let positions = timeline_positions(traces, table, opts.timeline)?;
    let pos = |c: &PanoramaCandidate| positions[c.video][c.center];
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&candidates[a], &candidates[b]);
        pos(ca)
            .total_cmp(&pos(cb))
            .then(ca.video.cmp(&cb.video))
            .then(ca.center.cmp(&cb.center))
    });
    let fov = fov_terms(&candidates.iter().map(|c| c.fov_pixels).collect::<Vec<_>>(), opts.sampling.fov_sign);
    let s = &opts.sampling;
    let tau = s.tau as f64;

    let mut first_of = vec![usize::MAX; traces.len()];
    let mut last_of = vec![0; traces.len()];
    for c in candidates {
        first_of[c.video] = first_of[c.video].min(c.center);
        last_of[c.video] = last_of[c.video].max(c.center);
    }

    let mut dag = AdjacencyDag::new(order.len());
    for (u, &pi) in order.iter().enumerate() {
        let p = &candidates[pi];
        let n = traces[p.video].len();
        if p.center < s.d_start || p.center == first_of[p.video] {
            dag.set_source(u, 0.0);
        }
        if p.center + s.d_end >= n || p.center == last_of[p.video] {
            dag.set_sink(u, 0.0);
        }
        for (v, &qi) in order.iter().enumerate().skip(u + 1) {
            let q = &candidates[qi];
            let cross = p.video != q.video;
            let allowed = if cross {
                opts.cross_mult.is_finite() && pos(q) - pos(p) <= tau
            } else {
                q.center > p.center && q.center - p.center <= s.tau
            };
            if !allowed {
                continue;
            }
            if let Some(c) = transition(p, q, fov[pi], traces, table, w) {
                let total = if cross { c.total + cross_penalty(c.total, opts.cross_mult) } else { c.total };
                dag.add_edge(u, v, total);
            }
        }
    }
    Ok((MultiGraph { dag, order }, fov))
}

pub fn solve_multi_sampling(
    candidates: &[PanoramaCandidate],
    traces: &[MotionTrace],
    table: &CorrespondenceTable,
    w: &CostWeights,
    opts: &MultiOptions,
) -> Result<MultiSelection> {
    let (g, fov) = multi_graph(candidates, traces, table, w, opts)?;
    let path = shortest_path(&g.dag, opts.sampling.solver).map_err(|e| match e {
        Error::NoPath(_) => Error::NoPath(describe_gap(&g, candidates)),
        e => e,
    })?;
    let selected: Vec<usize> = path.nodes.iter().map(|&u| g.order[u]).collect();
    let mut transition_costs = Vec::new();
    let mut cross_penalties = Vec::new();
    for e in selected.windows(2) {
        let (p, q) = (&candidates[e[0]], &candidates[e[1]]);
        let c = transition(p, q, fov[e[0]], traces, table, w).expect("selected edge exists");
        cross_penalties.push(if p.video != q.video { cross_penalty(c.total, opts.cross_mult) } else { 0.0 });
        transition_costs.push(c);
    }
    Ok(MultiSelection {
        selected,
        transition_costs,
        cross_penalties,
        total_cost: path.cost,
    })
}

/// First node in timeline order that nothing before it can reach, for error
/// messages.
fn describe_gap(g: &MultiGraph, candidates: &[PanoramaCandidate]) -> String {
    use crate::dag::WeightedDag;
    let n = g.dag.node_count();
    let mut reach = vec![false; n];
    for u in 0..n {
        if g.dag.source_weight(u).is_some() {
            reach[u] = true;
        }
        if reach[u] {
            g.dag.for_each_successor(u, &mut |v, _| reach[v] = true);
        }
    }
    match (0..n).find(|&u| !reach[u]) {
        Some(u) => {
            let c = &candidates[g.order[u]];
            format!("candidate graph is disconnected before video {} frame {}", c.video, c.center)
        }
        None => "no reachable candidate connects to the end of the timeline".into(),
    }
}

/// Homography taking the center of `q` into the center of `p`, if the two
/// are connected by tracking or a correspondence.
fn center_homography(
    p: &PanoramaCandidate,
    q: &PanoramaCandidate,
    traces: &[MotionTrace],
    table: &CorrespondenceTable,
) -> Option<Matrix3<f64>> {
    if p.video == q.video {
        return chain_homography(&traces[p.video], q.center, p.center).ok();
    }
    if let Some(e) = table.get(p.video, q.video, p.center) {
        if let (Some(h), Ok(c)) = (e.h, chain_homography(&traces[q.video], q.center, e.fb)) {
            return Some(h * c);
        }
    }
    let e = table.get(q.video, p.video, q.center)?;
    let inv = e.h?.try_inverse()?;
    let c = chain_homography(&traces[p.video], e.fb, p.center).ok()?;
    Some(c * inv)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiConfig {
    pub panorama: PanoramaConfig,
    pub cross_mult: f64,
    pub timeline: Timeline,
}

impl MultiConfig {
    pub fn new(k_flow: f64) -> Self {
        MultiConfig {
            panorama: PanoramaConfig::new(k_flow),
            cross_mult: DEFAULT_CROSS_MULT,
            timeline: Timeline::Synchronized,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiPlan {
    pub plan: PanoramaPlan,
    pub cross_penalties: Vec<f64>,
    pub switches: usize,
}

pub fn plan_multi(traces: &[MotionTrace], table: &CorrespondenceTable, config: &MultiConfig) -> Result<MultiPlan> {
    let frame_size = check_videos(traces)?;
    let candidates = build_multi_candidates(traces, table, config.panorama.omega)?;
    let opts = MultiOptions {
        sampling: config.panorama.sampling,
        cross_mult: config.cross_mult,
        timeline: config.timeline,
    };
    let sel = solve_multi_sampling(&candidates, traces, table, &config.panorama.weights, &opts)?;
    let alignment = sel
        .selected
        .iter()
        .enumerate()
        .map(|(k, &q)| {
            let h = (k > 0)
                .then(|| center_homography(&candidates[sel.selected[k - 1]], &candidates[q], traces, table))
                .flatten();
            align_rigid(h.as_ref(), frame_size.0, frame_size.1)
        })
        .collect();
    let refs = sel.selected.iter().map(|&i| &candidates[i]).collect::<Vec<_>>();
    let stabilization = stabilize(&refs, alignment, config.panorama.lambda, frame_size)?;
    let switches = sel.switches(&candidates);
    Ok(MultiPlan {
        plan: PanoramaPlan {
            video_id: traces.iter().map(MotionTrace::video_id).collect::<Vec<_>>().join("+"),
            frame_size,
            candidates,
            selected: sel.selected,
            transition_costs: sel.transition_costs,
            total_cost: sel.total_cost,
            stabilization,
        },
        cross_penalties: sel.cross_penalties,
        switches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(fa: usize, fb: usize, count: u32) -> RawMatch {
        RawMatch { fa, fb, count, h: None }
    }

    fn raw(matches: Vec<RawMatch>) -> RawCorrespondence {
        RawCorrespondence { a: 0, b: 1, matches }
    }

    #[test]
    fn keeps_the_strongest_match() {
        let t = finalize_pair(&raw(vec![m(5, 7, 42), m(5, 9, 13)]));
        assert_eq!(t[&5].fb, 7);
        assert_eq!(t[&5].count, 42);
    }

    #[test]
    fn drops_weak_matches() {
        assert!(finalize_pair(&raw(vec![m(5, 7, 9)])).is_empty());
    }

    #[test]
    fn drops_backward_matches() {
        let t = finalize_pair(&raw(vec![m(3, 8, 20), m(5, 6, 20)]));
        assert_eq!(t.keys().copied().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn parses_single_and_list_files() {
        let one = r#"{"a":0,"b":1,"matches":[{"fa":1,"fb":2,"count":30}]}"#;
        assert_eq!(parse_correspondences(one).unwrap().len(), 1);
        let many = format!("[{one},{one}]");
        assert_eq!(parse_correspondences(&many).unwrap().len(), 2);
    }

    #[test]
    fn interpolation_extends_with_unit_slope() {
        let k = [(10.0, 20.0), (20.0, 40.0)];
        assert_eq!(interpolate(&k, 15.0), 30.0);
        assert_eq!(interpolate(&k, 5.0), 15.0);
        assert_eq!(interpolate(&k, 25.0), 45.0);
    }
}
