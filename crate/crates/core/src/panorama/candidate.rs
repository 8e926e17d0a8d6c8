//! Panorama candidates: the frames of a window warped into the central
//! frame's coordinates, and the area their union covers.

use nalgebra::Matrix3;

use super::geometry::{step, warp_quad, BoundingBox, Quad};
use super::raster::CoverageMask;
use crate::error::{Error, Result};
use crate::trace::{normalize_homography, MotionTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub video: usize,
    pub frame: usize,
    /// Maps the member's pixels into the center frame.
    pub warp: Matrix3<f64>,
    pub width: u32,
    pub height: u32,
}

impl Member {
    pub fn quad(&self) -> Quad {
        warp_quad(&self.warp, self.width, self.height)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanoramaCandidate {
    pub video: usize,
    pub center: usize,
    pub members: Vec<Member>,
    /// Covered canvas area in full-resolution pixels.
    pub fov_pixels: f64,
    pub canvas: BoundingBox,
}

impl PanoramaCandidate {
    /// Builds a candidate from members whose first entry is the center frame.
    pub fn from_members(video: usize, center: usize, members: Vec<Member>) -> Result<Self> {
        let c = members
            .iter()
            .find(|m| m.video == video && m.frame == center)
            .ok_or_else(|| Error::invariant(center, "center frame is not a member of its candidate"))?;
        let center_area = c.width as f64 * c.height as f64;
        let quads = members.iter().map(Member::quad).collect::<Vec<_>>();
        let mask = CoverageMask::rasterize(&quads);
        let canvas = BoundingBox::of_quads(&quads).expect("candidate has at least one member");
        Ok(PanoramaCandidate {
            video,
            center,
            fov_pixels: mask.area().max(center_area),
            canvas,
            members,
        })
    }

    pub fn quads(&self) -> Vec<Quad> {
        self.members.iter().map(Member::quad).collect()
    }

    /// Coverage of the union after applying `transform` to every member.
    pub fn coverage_with(&self, transform: &Matrix3<f64>) -> CoverageMask {
        let quads = self
            .members
            .iter()
            .map(|m| warp_quad(&(transform * m.warp), m.width, m.height))
            .collect::<Vec<_>>();
        CoverageMask::rasterize(&quads)
    }
}

/// Window of `omega` frames centered on `center`, shifted to stay inside
/// `[0, n)`.
pub fn candidate_window(n: usize, center: usize, omega: usize) -> std::ops::Range<usize> {
    let len = omega.clamp(1, n.max(1));
    let start = center.saturating_sub(omega / 2).min(n.saturating_sub(len));
    start..start + len
}

/// Candidate centered on `center` with every window frame that stays tracked
/// to it. Members past a lost link are left out.
pub fn build_candidate(trace: &MotionTrace, center: usize, omega: usize) -> Result<PanoramaCandidate> {
    build_candidate_in(trace, 0, center, omega)
}

pub(crate) fn build_candidate_in(
    trace: &MotionTrace,
    video: usize,
    center: usize,
    omega: usize,
) -> Result<PanoramaCandidate> {
    let n = trace.len();
    if center >= n {
        return Err(Error::InvalidArgument(format!("center {center} out of range for {n} frames")));
    }
    let (w, h) = trace.frame_size();
    let window = candidate_window(n, center, omega);
    let member = |frame, warp| Member {
        video,
        frame,
        warp,
        width: w,
        height: h,
    };
    let mut before = Vec::new();
    let mut warp = Matrix3::identity();
    for f in (window.start..center).rev() {
        match step(trace, f, f + 1) {
            Ok(s) => {
                warp *= s;
                match normalize_homography(&warp) {
                    Some(h) => before.push(member(f, h)),
                    None => break,
                }
            }
            Err(Error::TrackingLost { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    before.reverse();
    let mut members = before;
    members.push(member(center, Matrix3::identity()));
    let mut warp = Matrix3::identity();
    for f in center + 1..window.end {
        match step(trace, f, f - 1) {
            Ok(s) => {
                warp *= s;
                match normalize_homography(&warp) {
                    Some(h) => members.push(member(f, h)),
                    None => break,
                }
            }
            Err(Error::TrackingLost { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    PanoramaCandidate::from_members(video, center, members)
}
