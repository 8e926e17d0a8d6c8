//! Central frame of each window: the frame whose displacement is closest to
//! the window's mean displacement.

use nalgebra::Matrix3;

use super::geometry::step;
use crate::error::{Error, Result};
use crate::trace::MotionTrace;

/// Per-frame displacement relative to the first frame of a tracked run.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementTrack {
    pub start: usize,
    pub pos: Vec<[f64; 2]>,
}

impl DisplacementTrack {
    pub fn frames(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.pos.len()
    }

    /// Frame minimizing the distance to the mean position; ties go to the
    /// earliest frame.
    pub fn central_frame(&self) -> Option<usize> {
        if self.pos.is_empty() {
            return None;
        }
        let k = self.pos.len() as f64;
        let mean = self.pos.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
        let mean = [mean[0] / k, mean[1] / k];
        let mut best = (f64::INFINITY, 0);
        for (t, p) in self.pos.iter().enumerate() {
            let d = (p[0] - mean[0]).hypot(p[1] - mean[1]);
            if d < best.0 {
                best = (d, t);
            }
        }
        Some(self.start + best.1)
    }
}

/// Displacement tracks for the non-overlapping windows `[kω, (k+1)ω)`, each
/// split wherever a consecutive homography is untracked. Positions are the
/// translation part of the homography chained from the run's first frame.
pub fn displacement_tracks(trace: &MotionTrace, omega: usize) -> Result<Vec<DisplacementTrack>> {
    if omega == 0 {
        return Err(Error::InvalidArgument("omega must be at least 1".into()));
    }
    let n = trace.len();
    let mut tracks = Vec::new();
    let mut ws = 0;
    while ws < n {
        let we = (ws + omega).min(n);
        let mut track = DisplacementTrack {
            start: ws,
            pos: vec![[0.0, 0.0]],
        };
        let mut h = Matrix3::identity();
        for t in ws + 1..we {
            match step(trace, t - 1, t) {
                Ok(s) => {
                    h = s * h;
                    let z = h[(2, 2)];
                    track.pos.push([h[(0, 2)] / z, h[(1, 2)] / z]);
                }
                Err(Error::TrackingLost { .. }) => {
                    log::debug!("tracking lost between {} and {t}; splitting window", t - 1);
                    tracks.push(std::mem::replace(
                        &mut track,
                        DisplacementTrack {
                            start: t,
                            pos: vec![[0.0, 0.0]],
                        },
                    ));
                    h = Matrix3::identity();
                }
                Err(e) => return Err(e),
            }
        }
        tracks.push(track);
        ws = we;
    }
    Ok(tracks)
}

pub fn select_central_frames(trace: &MotionTrace, omega: usize) -> Result<Vec<usize>> {
    Ok(displacement_tracks(trace, omega)?
        .iter()
        .filter_map(DisplacementTrack::central_frame)
        .collect())
}
