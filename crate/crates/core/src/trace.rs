//! In-memory and on-disk representation of per-video motion evidence.
//!
//! A [`MotionTrace`] holds everything the optimizers consume: frame metadata,
//! motion-direction links between frame pairs, per-frame color histograms and
//! inter-frame homographies. The planner never touches pixels; the extractor
//! writes traces in the JSON format implemented here.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on per-channel histogram mass.
pub const HISTOGRAM_MASS_TOLERANCE: f64 = 1e-9;
/// Relative tolerance between a stored `avg_flow` and the recomputed mean.
pub const AVG_FLOW_TOLERANCE: f64 = 1e-6;
/// Histogram bins per channel used by the synthetic generators.
pub const DEFAULT_HISTOGRAM_BINS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMeta {
    pub index: usize,
    pub timestamp_ms: f64,
    pub width: u32,
    pub height: u32,
}

/// Where the motion direction of a link came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DirectionSource {
    /// Epipole of the fundamental matrix between the two frames.
    #[serde(rename = "epi")]
    Epipole,
    /// Focus of expansion of the integrated optical flow (fallback).
    #[serde(rename = "foe")]
    Foe,
    /// Both estimates failed.
    #[serde(rename = "none")]
    Missing,
}

/// Motion evidence between frames `src` and `dst`.
///
/// `direction` is in normalized image coordinates (image center at the
/// origin, half-diagonal = 1). `flow_sum` is the aggregate flow magnitude
/// accumulated between the two frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionLink {
    pub src: usize,
    pub dst: usize,
    pub direction: [f64; 2],
    pub source: DirectionSource,
    pub flow_sum: f64,
}

impl MotionLink {
    pub fn skip(&self) -> usize {
        self.dst - self.src
    }

    pub fn has_direction(&self) -> bool {
        self.source != DirectionSource::Missing
    }
}

/// Three-channel color histogram, each channel normalized to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorHistogram {
    bins: usize,
    values: Vec<f64>,
}

impl ColorHistogram {
    /// Builds a histogram from `3 * bins` values laid out channel after channel.
    pub fn from_flat(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() % 3 != 0 {
            return Err(Error::Parse(format!(
                "histogram length {} is not a positive multiple of 3",
                values.len()
            )));
        }
        let bins = values.len() / 3;
        Ok(ColorHistogram { bins, values })
    }

    pub fn from_channels(channels: [Vec<f64>; 3]) -> Result<Self> {
        let bins = channels[0].len();
        if channels.iter().any(|c| c.len() != bins) {
            return Err(Error::Parse("histogram channels differ in length".into()));
        }
        Self::from_flat(channels.concat())
    }

    /// Unit mass spread evenly over every bin of every channel.
    pub fn uniform(bins: usize) -> Self {
        ColorHistogram {
            bins,
            values: vec![1.0 / bins as f64; 3 * bins],
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.values[c * self.bins..(c + 1) * self.bins]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    /// Checks non-negativity and per-channel unit mass.
    pub fn check_normalized(&self) -> std::result::Result<(), String> {
        for c in 0..3 {
            let ch = self.channel(c);
            if let Some(b) = ch.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return Err(format!("channel {c} bin {b} is negative or non-finite"));
            }
            let mass: f64 = ch.iter().sum();
            if (mass - 1.0).abs() > HISTOGRAM_MASS_TOLERANCE {
                return Err(format!("channel {c} sums to {mass}, expected 1"));
            }
        }
        Ok(())
    }
}

/// Homography mapping pixel coordinates of frame `src` into frame `dst`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomographyLink {
    pub src: usize,
    pub dst: usize,
    pub h: Matrix3<f64>,
    /// False where feature tracking was lost; `h` is then meaningless.
    pub tracked: bool,
}

/// All motion evidence extracted from one video.
#[derive(Debug, Clone)]
pub struct MotionTrace {
    video_id: String,
    fps: f64,
    frames: Vec<FrameMeta>,
    // Sorted by (src, dst); `offsets[i]..offsets[i + 1]` are the links leaving frame i.
    links: Vec<MotionLink>,
    offsets: Vec<usize>,
    histograms: Vec<ColorHistogram>,
    homographies: Vec<HomographyLink>,
    homography_index: HashMap<(usize, usize), usize>,
    avg_flow: f64,
    max_skip: usize,
}

impl MotionTrace {
    /// Assembles a trace and verifies every structural invariant.
    ///
    /// `histograms` is either empty (no appearance evidence) or holds one
    /// histogram per frame. Homographies are normalized so that `h[(2,2)] = 1`.
    pub fn new(
        video_id: impl Into<String>,
        fps: f64,
        frames: Vec<FrameMeta>,
        mut links: Vec<MotionLink>,
        histograms: Vec<ColorHistogram>,
        homographies: Vec<HomographyLink>,
    ) -> Result<Self> {
        let n = frames.len();
        if n == 0 {
            return Err(Error::invariant(0, "trace has no frames"));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::invariant(0, format!("fps must be positive, got {fps}")));
        }
        let (w0, h0) = (frames[0].width, frames[0].height);
        for (k, f) in frames.iter().enumerate() {
            if f.index != k {
                return Err(Error::invariant(
                    k,
                    format!("frame index {} is not dense (expected {k})", f.index),
                ));
            }
            if f.width == 0 || f.height == 0 {
                return Err(Error::invariant(k, "frame has zero width or height"));
            }
            if f.width != w0 || f.height != h0 {
                return Err(Error::invariant(
                    k,
                    format!("frame size {}x{} differs from {w0}x{h0}", f.width, f.height),
                ));
            }
            if !f.timestamp_ms.is_finite() {
                return Err(Error::invariant(k, "timestamp is not finite"));
            }
            if k > 0 && f.timestamp_ms < frames[k - 1].timestamp_ms {
                return Err(Error::invariant(k, "timestamps decrease"));
            }
        }

        for l in &links {
            if l.src >= l.dst || l.dst >= n {
                return Err(Error::invariant(
                    l.src.min(n - 1),
                    format!("link ({}, {}) is not a forward link inside the video", l.src, l.dst),
                ));
            }
            if l.has_direction() && !(l.direction[0].is_finite() && l.direction[1].is_finite()) {
                return Err(Error::invariant(
                    l.src,
                    format!("link ({}, {}) has a non-finite direction", l.src, l.dst),
                ));
            }
            if !(l.flow_sum.is_finite() && l.flow_sum >= 0.0) {
                return Err(Error::invariant(
                    l.src,
                    format!("link ({}, {}) has invalid flow {}", l.src, l.dst, l.flow_sum),
                ));
            }
        }
        links.sort_by_key(|l| (l.src, l.dst));
        if let Some(w) = links.windows(2).find(|w| (w[0].src, w[0].dst) == (w[1].src, w[1].dst)) {
            return Err(Error::invariant(
                w[0].src,
                format!("duplicate link ({}, {})", w[0].src, w[0].dst),
            ));
        }

        let mut offsets = vec![0usize; n + 1];
        for l in &links {
            offsets[l.src + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let max_skip = links.iter().map(MotionLink::skip).max().unwrap_or(0);

        let mut trace = MotionTrace {
            video_id: video_id.into(),
            fps,
            frames,
            links,
            offsets,
            histograms,
            homographies: Vec::new(),
            homography_index: HashMap::new(),
            avg_flow: 0.0,
            max_skip,
        };

        let mut consecutive_flow = 0.0;
        for i in 0..n.saturating_sub(1) {
            match trace.link(i, i + 1) {
                Some(l) => consecutive_flow += l.flow_sum,
                None => {
                    return Err(Error::invariant(
                        i,
                        format!("missing consecutive link ({i}, {})", i + 1),
                    ))
                }
            }
        }
        trace.avg_flow = if n > 1 {
            consecutive_flow / (n - 1) as f64
        } else {
            0.0
        };

        if !trace.histograms.is_empty() {
            if trace.histograms.len() != n {
                return Err(Error::invariant(
                    trace.histograms.len().min(n - 1),
                    format!("{} histograms for {n} frames", trace.histograms.len()),
                ));
            }
            let bins = trace.histograms[0].bins();
            for (k, hist) in trace.histograms.iter().enumerate() {
                if hist.bins() != bins {
                    return Err(Error::invariant(k, "histogram bin count differs from frame 0"));
                }
                hist.check_normalized().map_err(|r| Error::invariant(k, r))?;
            }
        }

        for mut hl in homographies {
            if hl.src >= n || hl.dst >= n || hl.src == hl.dst {
                return Err(Error::invariant(
                    hl.src.min(n - 1),
                    format!("homography ({}, {}) references invalid frames", hl.src, hl.dst),
                ));
            }
            if hl.tracked {
                hl.h = normalize_homography(&hl.h).ok_or_else(|| {
                    Error::invariant(hl.src, format!("homography ({}, {}) is degenerate", hl.src, hl.dst))
                })?;
                let det = hl.h[(0, 0)] * hl.h[(1, 1)] - hl.h[(0, 1)] * hl.h[(1, 0)];
                if det == 0.0 {
                    return Err(Error::invariant(
                        hl.src,
                        format!("homography ({}, {}) has a singular linear part", hl.src, hl.dst),
                    ));
                }
            } else if let Some(h) = normalize_homography(&hl.h) {
                hl.h = h;
            }
            if trace.homography_index.insert((hl.src, hl.dst), trace.homographies.len()).is_some() {
                return Err(Error::invariant(
                    hl.src,
                    format!("duplicate homography ({}, {})", hl.src, hl.dst),
                ));
            }
            trace.homographies.push(hl);
        }

        Ok(trace)
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[FrameMeta] {
        &self.frames
    }

    pub fn frame_size(&self) -> (u32, u32) {
        (self.frames[0].width, self.frames[0].height)
    }

    /// Mean `flow_sum` over all consecutive-frame links.
    pub fn avg_flow(&self) -> f64 {
        self.avg_flow
    }

    /// Largest `dst - src` over all links.
    pub fn max_skip(&self) -> usize {
        self.max_skip
    }

    pub fn links(&self) -> &[MotionLink] {
        &self.links
    }

    /// Links leaving frame `i`, sorted by destination.
    pub fn links_from(&self, i: usize) -> &[MotionLink] {
        if i >= self.frames.len() {
            return &[];
        }
        &self.links[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn link(&self, i: usize, j: usize) -> Option<&MotionLink> {
        let out = self.links_from(i);
        if j <= i {
            return None;
        }
        // Links are usually dense in the skip, so try the direct slot first.
        if let Some(l) = out.get(j - i - 1) {
            if l.dst == j {
                return Some(l);
            }
        }
        out.binary_search_by_key(&j, |l| l.dst).ok().map(|k| &out[k])
    }

    pub fn histograms(&self) -> &[ColorHistogram] {
        &self.histograms
    }

    pub fn histogram(&self, i: usize) -> Option<&ColorHistogram> {
        self.histograms.get(i)
    }

    pub fn homographies(&self) -> &[HomographyLink] {
        &self.homographies
    }

    pub fn homography(&self, src: usize, dst: usize) -> Option<&HomographyLink> {
        self.homography_index.get(&(src, dst)).map(|&k| &self.homographies[k])
    }
}

/// Scales `h` so that its bottom-right entry is 1. `None` if that entry vanishes.
pub fn normalize_homography(h: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let s = h[(2, 2)];
    if !s.is_finite() || s.abs() < 1e-12 || h.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(h / s)
}

/// Maps a pixel position to normalized image coordinates: the image center
/// goes to the origin and distances are divided by the half-diagonal.
pub fn normalize_direction(px: [f64; 2], width: u32, height: u32) -> [f64; 2] {
    let (hw, hh) = (width as f64 / 2.0, height as f64 / 2.0);
    let half_diag = hw.hypot(hh);
    [(px[0] - hw) / half_diag, (px[1] - hh) / half_diag]
}

/// Inverse of [`normalize_direction`].
pub fn denormalize_direction(p: [f64; 2], width: u32, height: u32) -> [f64; 2] {
    let (hw, hh) = (width as f64 / 2.0, height as f64 / 2.0);
    let half_diag = hw.hypot(hh);
    [p[0] * half_diag + hw, p[1] * half_diag + hh]
}

// ---------------------------------------------------------------------------
// JSON trace format

#[derive(Debug, Serialize, Deserialize)]
struct TraceFile {
    video_id: String,
    fps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    avg_flow: Option<f64>,
    frames: Vec<FrameRecord>,
    links: Vec<LinkRecord>,
    #[serde(default)]
    hists: Vec<Vec<f64>>,
    #[serde(default)]
    homs: Vec<HomRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameRecord {
    i: usize,
    t_ms: f64,
    w: u32,
    h: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct LinkRecord {
    i: usize,
    j: usize,
    // null when the direction is missing
    dx: Option<f64>,
    dy: Option<f64>,
    src: DirectionSource,
    flow: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct HomRecord {
    i: usize,
    j: usize,
    #[serde(rename = "H")]
    h: [f64; 9],
    tracked: bool,
}

impl MotionTrace {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: TraceFile = serde_json::from_str(text)?;
        let stored_avg = file.avg_flow;
        let frames = file
            .frames
            .into_iter()
            .map(|f| FrameMeta {
                index: f.i,
                timestamp_ms: f.t_ms,
                width: f.w,
                height: f.h,
            })
            .collect();
        let links = file
            .links
            .into_iter()
            .map(|l| MotionLink {
                src: l.i,
                dst: l.j,
                direction: [l.dx.unwrap_or(f64::NAN), l.dy.unwrap_or(f64::NAN)],
                source: l.src,
                flow_sum: l.flow,
            })
            .collect();
        let histograms = file
            .hists
            .into_iter()
            .map(ColorHistogram::from_flat)
            .collect::<Result<Vec<_>>>()?;
        let homographies = file
            .homs
            .into_iter()
            .map(|r| HomographyLink {
                src: r.i,
                dst: r.j,
                h: Matrix3::from_row_slice(&r.h),
                tracked: r.tracked,
            })
            .collect();
        let trace = MotionTrace::new(file.video_id, file.fps, frames, links, histograms, homographies)?;
        if let Some(stored) = stored_avg {
            let computed = trace.avg_flow;
            if (stored - computed).abs() > AVG_FLOW_TOLERANCE * computed.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::invariant(
                    0,
                    format!("stored avg_flow {stored} disagrees with recomputed {computed}"),
                ));
            }
        }
        Ok(trace)
    }

    pub fn to_json_string(&self) -> String {
        let file = TraceFile {
            video_id: self.video_id.clone(),
            fps: self.fps,
            avg_flow: Some(self.avg_flow),
            frames: self
                .frames
                .iter()
                .map(|f| FrameRecord {
                    i: f.index,
                    t_ms: f.timestamp_ms,
                    w: f.width,
                    h: f.height,
                })
                .collect(),
            links: self
                .links
                .iter()
                .map(|l| LinkRecord {
                    i: l.src,
                    j: l.dst,
                    dx: Some(l.direction[0]).filter(|v| v.is_finite()),
                    dy: Some(l.direction[1]).filter(|v| v.is_finite()),
                    src: l.source,
                    flow: l.flow_sum,
                })
                .collect(),
            hists: self.histograms.iter().map(|h| h.values.clone()).collect(),
            homs: self
                .homographies
                .iter()
                .map(|hl| {
                    let mut h = [0.0; 9];
                    for r in 0..3 {
                        for c in 0..3 {
                            h[3 * r + c] = hl.h[(r, c)];
                        }
                    }
                    HomRecord {
                        i: hl.src,
                        j: hl.dst,
                        h,
                        tracked: hl.tracked,
                    }
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("trace serialization cannot fail")
    }
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<MotionTrace> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    MotionTrace::from_json_str(&text)
}

pub fn save_trace(trace: &MotionTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, trace.to_json_string()).map_err(|e| Error::io(path, e))
}
