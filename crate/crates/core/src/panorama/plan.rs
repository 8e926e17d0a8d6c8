//! End-to-end panorama planning for one video, and the plan file read by the
//! renderer.

use std::path::Path;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::align::{align_rigid, Alignment, RigidTransform};
use super::candidate::{build_candidate_in, Member, PanoramaCandidate};
use super::central::select_central_frames;
use super::crop::solve_crop_path;
use super::geometry::chain_homography;
use super::sampling::{solve_panorama_sampling, PanoramaEdgeCost, PanoramaSamplingOptions};
use crate::cost::CostWeights;
use crate::error::{Error, Result};
use crate::trace::MotionTrace;

pub const DEFAULT_OMEGA: usize = 50;
pub const DEFAULT_LAMBDA: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanoramaConfig {
    pub omega: usize,
    pub lambda: f64,
    pub weights: CostWeights,
    pub sampling: PanoramaSamplingOptions,
}

impl PanoramaConfig {
    pub fn new(k_flow: f64) -> Self {
        PanoramaConfig {
            omega: DEFAULT_OMEGA,
            lambda: DEFAULT_LAMBDA,
            weights: CostWeights::panorama(k_flow),
            sampling: PanoramaSamplingOptions::default(),
        }
    }
}

/// Poses, crop centers and crop sizes for a sequence of selected panoramas.
#[derive(Debug, Clone, PartialEq)]
pub struct Stabilization {
    pub alignment: Vec<Alignment>,
    /// Pose of each selected panorama in its segment's canvas.
    pub poses: Vec<RigidTransform>,
    pub crop: Vec<[f64; 2]>,
    /// Crop size of the segment each selected panorama belongs to.
    pub crop_sizes: Vec<[f64; 2]>,
}

impl Stabilization {
    /// Smallest crop over all segments.
    pub fn common_crop(&self) -> [f64; 2] {
        self.crop_sizes
            .iter()
            .fold([f64::INFINITY; 2], |a, s| [a[0].min(s[0]), a[1].min(s[1])])
    }
}

/// Accumulates the rigid alignments into poses, splitting at resets, and
/// solves a crop path per segment.
pub fn stabilize(
    selected: &[&PanoramaCandidate],
    alignment: Vec<Alignment>,
    lambda: f64,
    frame_size: (u32, u32),
) -> Result<Stabilization> {
    if alignment.len() != selected.len() {
        return Err(Error::InvalidArgument("one alignment per selected panorama is required".into()));
    }
    let mut poses = Vec::with_capacity(selected.len());
    let mut pose = RigidTransform::IDENTITY;
    for a in &alignment {
        pose = if a.reset { RigidTransform::IDENTITY } else { pose.compose(&a.transform) };
        poses.push(pose);
    }
    let masks = selected
        .par_iter()
        .zip(&poses)
        .map(|(c, p)| c.coverage_with(&p.pixel_matrix(frame_size.0, frame_size.1)))
        .collect::<Vec<_>>();
    let mut crop = Vec::with_capacity(selected.len());
    let mut crop_sizes = Vec::with_capacity(selected.len());
    let mut start = 0;
    while start < selected.len() {
        let mut end = start + 1;
        while end < selected.len() && !alignment[end].reset {
            end += 1;
        }
        let seg = start..end;
        let mass = masks[seg.clone()]
            .iter()
            .zip(&selected[seg.clone()])
            .map(|(m, c)| m.centroid().ok_or(Error::EmptyCoverage { frame: c.center }))
            .collect::<Result<Vec<_>>>()?;
        let frames = selected[seg.clone()].iter().map(|c| c.center).collect::<Vec<_>>();
        let path = solve_crop_path(&mass, lambda, &masks[seg.clone()], &frames, frame_size)?;
        crop.extend(path.centers);
        crop_sizes.extend(std::iter::repeat_n([path.width, path.height], seg.len()));
        start = end;
    }
    Ok(Stabilization {
        alignment,
        poses,
        crop,
        crop_sizes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanoramaPlan {
    pub video_id: String,
    pub frame_size: (u32, u32),
    pub candidates: Vec<PanoramaCandidate>,
    pub selected: Vec<usize>,
    pub transition_costs: Vec<PanoramaEdgeCost>,
    pub total_cost: f64,
    pub stabilization: Stabilization,
}

pub fn build_candidates(trace: &MotionTrace, centers: &[usize], omega: usize) -> Result<Vec<PanoramaCandidate>> {
    centers.par_iter().map(|&c| build_candidate_in(trace, 0, c, omega)).collect()
}

pub fn plan_panoramas(trace: &MotionTrace, config: &PanoramaConfig) -> Result<PanoramaPlan> {
    let centers = select_central_frames(trace, config.omega)?;
    log::info!("{} panorama candidates for {} frames", centers.len(), trace.len());
    let candidates = build_candidates(trace, &centers, config.omega)?;
    let selection = solve_panorama_sampling(&candidates, trace, &config.weights, &config.sampling)?;
    let frame_size = trace.frame_size();
    let mut alignment = Vec::with_capacity(selection.selected.len());
    for (k, &id) in selection.selected.iter().enumerate() {
        if k == 0 {
            alignment.push(align_rigid(None, frame_size.0, frame_size.1));
            continue;
        }
        let prev = candidates[selection.selected[k - 1]].center;
        let h = match chain_homography(trace, candidates[id].center, prev) {
            Ok(h) => Some(h),
            Err(Error::TrackingLost { .. }) => None,
            Err(e) => return Err(e),
        };
        alignment.push(align_rigid(h.as_ref(), frame_size.0, frame_size.1));
    }
    let selected_refs = selection.selected.iter().map(|&i| &candidates[i]).collect::<Vec<_>>();
    let stabilization = stabilize(&selected_refs, alignment, config.lambda, frame_size)?;
    Ok(PanoramaPlan {
        video_id: trace.video_id().to_string(),
        frame_size,
        candidates,
        selected: selection.selected,
        transition_costs: selection.transition_costs,
        total_cost: selection.total_cost,
        stabilization,
    })
}

impl PanoramaPlan {
    pub fn selected_centers(&self) -> Vec<usize> {
        self.selected.iter().map(|&i| self.candidates[i].center).collect()
    }

    /// Mean crop area over the selected panoramas relative to the input frame
    /// area, in percent.
    pub fn fov_ratio_pct(&self) -> f64 {
        let sizes = &self.stabilization.crop_sizes;
        if sizes.is_empty() {
            return 0.0;
        }
        let frame = self.frame_size.0 as f64 * self.frame_size.1 as f64;
        100.0 * sizes.iter().map(|s| s[0] * s[1]).sum::<f64>() / (sizes.len() as f64 * frame)
    }

    /// Checks that every pose is a proper rotation and every crop rectangle
    /// lies inside its aligned panorama.
    pub fn check(&self) -> Result<()> {
        let st = &self.stabilization;
        for (k, &id) in self.selected.iter().enumerate() {
            let c = &self.candidates[id];
            let m = st.poses[k].pixel_matrix(self.frame_size.0, self.frame_size.1);
            let r = m.fixed_view::<2, 2>(0, 0);
            if ((r.transpose() * r) - nalgebra::Matrix2::identity()).abs().max() > 1e-9 {
                return Err(Error::invariant(c.center, "pose is not a rotation"));
            }
            let mask = c.coverage_with(&m);
            let [w, h] = st.crop_sizes[k];
            let cr = st.crop[k];
            if !mask.covers_rect([cr[0] - w / 2.0, cr[1] - h / 2.0], [cr[0] + w / 2.0, cr[1] + h / 2.0]) {
                return Err(Error::invariant(c.center, "crop rectangle leaves the panorama"));
            }
        }
        Ok(())
    }

    pub fn to_file(&self) -> PlanFile {
        let st = &self.stabilization;
        let common = st.common_crop();
        PlanFile {
            video_id: self.video_id.clone(),
            frame_size: [self.frame_size.0, self.frame_size.1],
            panoramas: self.candidates.iter().map(PanoramaEntry::from_candidate).collect(),
            selected: self.selected.clone(),
            transition_costs: self.transition_costs.clone(),
            total_cost: self.total_cost,
            alignment: st
                .alignment
                .iter()
                .map(|a| AlignmentEntry {
                    theta: a.transform.theta,
                    tx: a.transform.tx,
                    ty: a.transform.ty,
                    reset: a.reset,
                })
                .collect(),
            crop: st
                .crop
                .iter()
                .zip(&st.crop_sizes)
                .map(|(c, s)| CropEntry {
                    cx: c[0],
                    cy: c[1],
                    w: s[0],
                    h: s[1],
                })
                .collect(),
            crop_w: if common[0].is_finite() { common[0] } else { 0.0 },
            crop_h: if common[1].is_finite() { common[1] } else { 0.0 },
        }
    }

    pub fn from_file(f: PlanFile) -> Result<Self> {
        let frame_size = (f.frame_size[0], f.frame_size[1]);
        let candidates = f
            .panoramas
            .into_iter()
            .map(|p| p.into_candidate(frame_size))
            .collect::<Result<Vec<_>>>()?;
        let n = f.selected.len();
        if f.alignment.len() != n || f.crop.len() != n || f.selected.iter().any(|&i| i >= candidates.len()) {
            return Err(Error::Parse("plan selection, alignment and crop lists disagree".into()));
        }
        let alignment = f
            .alignment
            .iter()
            .map(|a| Alignment {
                transform: RigidTransform {
                    theta: a.theta,
                    tx: a.tx,
                    ty: a.ty,
                },
                reset: a.reset,
            })
            .collect::<Vec<_>>();
        let mut poses = Vec::with_capacity(n);
        let mut pose = RigidTransform::IDENTITY;
        for a in &alignment {
            pose = if a.reset { RigidTransform::IDENTITY } else { pose.compose(&a.transform) };
            poses.push(pose);
        }
        Ok(PanoramaPlan {
            video_id: f.video_id,
            frame_size,
            candidates,
            selected: f.selected,
            transition_costs: f.transition_costs,
            total_cost: f.total_cost,
            stabilization: Stabilization {
                alignment,
                poses,
                crop: f.crop.iter().map(|c| [c.cx, c.cy]).collect(),
                crop_sizes: f.crop.iter().map(|c| [c.w, c.h]).collect(),
            },
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("plan serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub video_id: String,
    pub frame_size: [u32; 2],
    pub panoramas: Vec<PanoramaEntry>,
    pub selected: Vec<usize>,
    #[serde(default)]
    pub transition_costs: Vec<PanoramaEdgeCost>,
    #[serde(default)]
    pub total_cost: f64,
    pub alignment: Vec<AlignmentEntry>,
    pub crop: Vec<CropEntry>,
    pub crop_w: f64,
    pub crop_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanoramaEntry {
    #[serde(default, skip_serializing_if = "is_zero")]
    pub video: usize,
    pub center: usize,
    pub members: Vec<usize>,
    /// Video of each member, when a panorama mixes videos.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub member_videos: Option<Vec<usize>>,
    pub warps: Vec<[f64; 9]>,
    pub fov: f64,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

impl PanoramaEntry {
    fn from_candidate(c: &PanoramaCandidate) -> Self {
        let mixed = c.members.iter().any(|m| m.video != c.video);
        PanoramaEntry {
            video: c.video,
            center: c.center,
            members: c.members.iter().map(|m| m.frame).collect(),
            member_videos: mixed.then(|| c.members.iter().map(|m| m.video).collect()),
            warps: c
                .members
                .iter()
                .map(|m| {
                    let h = &m.warp;
                    [h[(0, 0)], h[(0, 1)], h[(0, 2)], h[(1, 0)], h[(1, 1)], h[(1, 2)], h[(2, 0)], h[(2, 1)], h[(2, 2)]]
                })
                .collect(),
            fov: c.fov_pixels,
        }
    }

    fn into_candidate(self, frame_size: (u32, u32)) -> Result<PanoramaCandidate> {
        if self.warps.len() != self.members.len()
            || self.member_videos.as_ref().is_some_and(|v| v.len() != self.members.len())
        {
            return Err(Error::Parse(format!(
                "panorama at {} has mismatched member and warp lists",
                self.center
            )));
        }
        let members = self
            .members
            .iter()
            .zip(&self.warps)
            .enumerate()
            .map(|(k, (&frame, w))| Member {
                video: self.member_videos.as_ref().map_or(self.video, |v| v[k]),
                frame,
                warp: Matrix3::from_row_slice(w),
                width: frame_size.0,
                height: frame_size.1,
            })
            .collect();
        let mut c = PanoramaCandidate::from_members(self.video, self.center, members)?;
        c.fov_pixels = self.fov;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentEntry {
    pub theta: f64,
    pub tx: f64,
    pub ty: f64,
    pub reset: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropEntry {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}
