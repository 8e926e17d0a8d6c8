//! Homography chaining and warped frame outlines.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::trace::MotionTrace;

/// Four corners of a warped frame, in order around the outline.
pub type Quad = [[f64; 2]; 4];

pub fn apply_homography(h: &Matrix3<f64>, p: [f64; 2]) -> [f64; 2] {
    let v = h * Vector3::new(p[0], p[1], 1.0);
    [v.x / v.z, v.y / v.z]
}

pub fn frame_corners(width: u32, height: u32) -> Quad {
    let (w, h) = (width as f64, height as f64);
    [[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]]
}

pub fn warp_quad(h: &Matrix3<f64>, width: u32, height: u32) -> Quad {
    frame_corners(width, height).map(|p| apply_homography(h, p))
}

/// Homography taking frame `a` into the adjacent frame `b`, inverting the
/// stored link when only the opposite direction is tracked.
pub(crate) fn step(trace: &MotionTrace, a: usize, b: usize) -> Result<Matrix3<f64>> {
    let lost = Error::TrackingLost {
        src: a.min(b),
        dst: a.max(b),
    };
    if let Some(l) = trace.homography(a, b).filter(|l| l.tracked) {
        return Ok(l.h);
    }
    match trace.homography(b, a).filter(|l| l.tracked) {
        Some(l) => l.h.try_inverse().ok_or(lost),
        None => Err(lost),
    }
}

/// Homography mapping pixels of frame `from` into frame `to`, chained through
/// every consecutive pair in between.
pub fn chain_homography(trace: &MotionTrace, from: usize, to: usize) -> Result<Matrix3<f64>> {
    let n = trace.len();
    if from >= n || to >= n {
        return Err(Error::InvalidArgument(format!(
            "frames {from} and {to} must be below {n}"
        )));
    }
    let mut h = Matrix3::identity();
    if from <= to {
        for k in from..to {
            h = step(trace, k, k + 1)? * h;
        }
    } else {
        for k in (to + 1..=from).rev() {
            h = step(trace, k, k - 1)? * h;
        }
    }
    crate::trace::normalize_homography(&h).ok_or(Error::TrackingLost {
        src: from.min(to),
        dst: from.max(to),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl BoundingBox {
    pub fn of_quads<'a>(quads: impl IntoIterator<Item = &'a Quad>) -> Option<Self> {
        let mut it = quads.into_iter().flat_map(|q| q.iter()).peekable();
        it.peek()?;
        let mut b = BoundingBox {
            min: [f64::INFINITY; 2],
            max: [f64::NEG_INFINITY; 2],
        };
        for p in it {
            for a in 0..2 {
                b.min[a] = b.min[a].min(p[a]);
                b.max[a] = b.max[a].max(p[a]);
            }
        }
        Some(b)
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }
}
