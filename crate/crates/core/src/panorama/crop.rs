//! Crop-window path: smoothed crop centers and the largest fixed-aspect crop
//! that stays inside every aligned panorama.
//!
//! The centers minimize `Σ ‖cr_i − m_i‖² + λ Σ ‖cr_i − cr_{i−1}‖²`, whose
//! stationarity conditions are, at interior points,
//! `cr_i = (λ (cr_{i−1} + cr_{i+1}) + m_i) / (2λ + 1)`, and at either end
//! `(1 + λ) cr_0 = m_0 + λ cr_1`. The system is tridiagonal and solved
//! directly per coordinate.

use super::raster::CoverageMask;
use crate::error::{Error, Result};

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("lambda must be finite and non-negative, got {lambda}")))
    }
}

/// Thomas algorithm for the crop system along one coordinate.
fn solve_axis(m: &[f64], lambda: f64) -> Vec<f64> {
    let n = m.len();
    if n == 1 {
        return m.to_vec();
    }
    let diag = |i: usize| if i == 0 || i == n - 1 { 1.0 + lambda } else { 1.0 + 2.0 * lambda };
    let off = -lambda;
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / diag(0);
    d[0] = m[0] / diag(0);
    for i in 1..n {
        let denom = diag(i) - off * c[i - 1];
        c[i] = off / denom;
        d[i] = (m[i] - off * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

pub fn smooth_crop_centers(m: &[[f64; 2]], lambda: f64) -> Result<Vec<[f64; 2]>> {
    check_lambda(lambda)?;
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let xs = solve_axis(&m.iter().map(|p| p[0]).collect::<Vec<_>>(), lambda);
    let ys = solve_axis(&m.iter().map(|p| p[1]).collect::<Vec<_>>(), lambda);
    Ok(xs.into_iter().zip(ys).map(|(x, y)| [x, y]).collect())
}

pub fn crop_energy(cr: &[[f64; 2]], m: &[[f64; 2]], lambda: f64) -> f64 {
    let d2 = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    let data: f64 = cr.iter().zip(m).map(|(&c, &p)| d2(c, p)).sum();
    let smooth: f64 = cr.windows(2).map(|w| d2(w[1], w[0])).sum();
    data + lambda * smooth
}

/// Largest deviation from the interior fixed-point relation.
pub fn fixed_point_residual(cr: &[[f64; 2]], m: &[[f64; 2]], lambda: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 1..cr.len().saturating_sub(1) {
        for a in 0..2 {
            let rhs = (lambda * (cr[i - 1][a] + cr[i + 1][a]) + m[i][a]) / (2.0 * lambda + 1.0);
            worst = worst.max((cr[i][a] - rhs).abs());
        }
    }
    worst
}

pub fn path_length(cr: &[[f64; 2]]) -> f64 {
    cr.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum()
}

/// Scale `s` of the largest `s·width × s·height` rectangle centered at
/// `center` that the mask covers, or `None` if the center itself is not
/// covered.
pub fn largest_inscribed_scale(mask: &CoverageMask, center: [f64; 2], width: u32, height: u32) -> Option<f64> {
    if !mask.covers_point(center) {
        return None;
    }
    let (w, h) = (width as f64, height as f64);
    let fits = |s: f64| {
        let (hw, hh) = (s * w / 2.0, s * h / 2.0);
        mask.covers_rect([center[0] - hw, center[1] - hh], [center[0] + hw, center[1] + hh])
    };
    let mut hi = 1.0;
    while fits(hi) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CropPath {
    pub centers: Vec<[f64; 2]>,
    pub width: f64,
    pub height: f64,
}

/// Smoothed centers for one reset segment plus the crop size that fits every
/// mask. `frames` names each entry for error reporting.
pub fn solve_crop_path(
    mass_centers: &[[f64; 2]],
    lambda: f64,
    masks: &[CoverageMask],
    frames: &[usize],
    frame_size: (u32, u32),
) -> Result<CropPath> {
    if masks.len() != mass_centers.len() || frames.len() != mass_centers.len() {
        return Err(Error::InvalidArgument("crop inputs have mismatched lengths".into()));
    }
    let centers = smooth_crop_centers(mass_centers, lambda)?;
    let mut scale = f64::INFINITY;
    for ((mask, &c), &f) in masks.iter().zip(&centers).zip(frames) {
        let s = largest_inscribed_scale(mask, c, frame_size.0, frame_size.1).ok_or(Error::EmptyCoverage { frame: f })?;
        if s <= 0.0 {
            return Err(Error::EmptyCoverage { frame: f });
        }
        scale = scale.min(s);
    }
    if centers.is_empty() {
        scale = 0.0;
    }
    Ok(CropPath {
        centers,
        width: scale * frame_size.0 as f64,
        height: scale * frame_size.1 as f64,
    })
}
