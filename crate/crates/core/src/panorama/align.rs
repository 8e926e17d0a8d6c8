//! Rigid (rotation plus translation) alignment between consecutive selected
//! panoramas.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::geometry::{apply_homography, frame_corners};

/// Rotation by `theta` followed by translation, acting on coordinates
/// centered on the frame center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub theta: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl RigidTransform {
    pub const IDENTITY: RigidTransform = RigidTransform {
        theta: 0.0,
        tx: 0.0,
        ty: 0.0,
    };

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [c * p[0] - s * p[1] + self.tx, s * p[0] + c * p[1] + self.ty]
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        let [tx, ty] = self.apply([other.tx, other.ty]);
        RigidTransform {
            theta: self.theta + other.theta,
            tx,
            ty,
        }
    }

    /// Pixel-coordinate matrix for frames of the given size.
    pub fn pixel_matrix(&self, width: u32, height: u32) -> Matrix3<f64> {
        let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
        let (s, c) = self.theta.sin_cos();
        let [ox, oy] = self.apply([-cx, -cy]);
        Matrix3::new(c, -s, ox + cx, s, c, oy + cy, 0.0, 0.0, 1.0)
    }
}

/// Least-squares rigid fit taking `src` onto `dst`.
pub fn fit_rigid(src: &[[f64; 2]], dst: &[[f64; 2]]) -> RigidTransform {
    assert_eq!(src.len(), dst.len());
    assert!(!src.is_empty());
    let k = src.len() as f64;
    let mean = |pts: &[[f64; 2]]| {
        let s = pts.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
        [s[0] / k, s[1] / k]
    };
    let (ms, md) = (mean(src), mean(dst));
    let (mut dot, mut cross) = (0.0, 0.0);
    for (p, q) in src.iter().zip(dst) {
        let (px, py) = (p[0] - ms[0], p[1] - ms[1]);
        let (qx, qy) = (q[0] - md[0], q[1] - md[1]);
        dot += px * qx + py * qy;
        cross += px * qy - py * qx;
    }
    let theta = cross.atan2(dot);
    let rot = RigidTransform { theta, tx: 0.0, ty: 0.0 }.apply(ms);
    RigidTransform {
        theta,
        tx: md[0] - rot[0],
        ty: md[1] - rot[1],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub transform: RigidTransform,
    pub reset: bool,
}

/// Rigid approximation of `h` (pixels of the next center into the previous
/// one) fitted on the frame corners. `None` means tracking was lost, which
/// yields a reset with the identity transform.
pub fn align_rigid(h: Option<&Matrix3<f64>>, width: u32, height: u32) -> Alignment {
    let Some(h) = h else {
        return Alignment {
            transform: RigidTransform::IDENTITY,
            reset: true,
        };
    };
    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    let corners = frame_corners(width, height);
    let src = corners.map(|p| [p[0] - cx, p[1] - cy]);
    let dst = corners.map(|p| {
        let q = apply_homography(h, p);
        [q[0] - cx, q[1] - cy]
    });
    if dst.iter().any(|q| !q[0].is_finite() || !q[1].is_finite()) {
        return Alignment {
            transform: RigidTransform::IDENTITY,
            reset: true,
        };
    }
    Alignment {
        transform: fit_rigid(&src, &dst),
        reset: false,
    }
}
