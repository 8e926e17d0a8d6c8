//! Seeded synthetic traces for tests, benchmarks and the acceptance suite.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{
    ColorHistogram, DirectionSource, FrameMeta, HomographyLink, MotionLink, MotionTrace, DEFAULT_HISTOGRAM_BINS,
};

pub const SYNTH_WIDTH: u32 = 640;
pub const SYNTH_HEIGHT: u32 = 480;
pub const SYNTH_FPS: f64 = 30.0;

/// A synthetic trace plus the per-frame ground truth it was built from.
#[derive(Debug, Clone)]
pub struct SynthTrace {
    pub trace: MotionTrace,
    /// Noise-free horizontal gaze of each frame, normalized units.
    pub gaze: Vec<f64>,
}

impl SynthTrace {
    /// Frames whose noise-free gaze points straight ahead.
    pub fn is_forward(&self, frame: usize) -> bool {
        self.gaze[frame] == 0.0
    }
}

fn frames(n: usize) -> Vec<FrameMeta> {
    (0..n)
        .map(|i| FrameMeta {
            index: i,
            timestamp_ms: i as f64 * 1000.0 / SYNTH_FPS,
            width: SYNTH_WIDTH,
            height: SYNTH_HEIGHT,
        })
        .collect()
}

fn half_diagonal() -> f64 {
    (SYNTH_WIDTH as f64 / 2.0).hypot(SYNTH_HEIGHT as f64 / 2.0)
}

fn translation(tx: f64, ty: f64) -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0)
}

/// Trace of a camera whose gaze follows `gaze` (plus noise) while moving
/// with per-frame flow `flow`. The motion direction of link `(i, j)` is the
/// gaze of frame `i`; consecutive homographies translate by the gaze change.
fn gaze_trace(
    video_id: &str,
    gaze: Vec<f64>,
    flow: &[f64],
    noise: f64,
    max_skip: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SynthTrace> {
    let n = gaze.len();
    let normal = Normal::new(0.0, noise).map_err(|e| Error::InvalidArgument(format!("noise: {e}")))?;
    let observed: Vec<[f64; 2]> = gaze
        .iter()
        .map(|&g| [g + normal.sample(rng), normal.sample(rng)])
        .collect();
    let mut cum = vec![0.0; n];
    for k in 1..n {
        cum[k] = cum[k - 1] + flow[k - 1];
    }
    let mut links = Vec::with_capacity(n * max_skip);
    for i in 0..n {
        for j in i + 1..=(i + max_skip).min(n - 1) {
            links.push(MotionLink {
                src: i,
                dst: j,
                direction: observed[i],
                source: DirectionSource::Epipole,
                flow_sum: cum[j] - cum[i],
            });
        }
    }
    let hd = half_diagonal();
    let homographies = (0..n.saturating_sub(1))
        .map(|t| HomographyLink {
            src: t,
            dst: t + 1,
            h: translation(
                (observed[t][0] - observed[t + 1][0]) * hd,
                (observed[t][1] - observed[t + 1][1]) * hd,
            ),
            tracked: true,
        })
        .collect();
    let histograms = vec![ColorHistogram::uniform(DEFAULT_HISTOGRAM_BINS); n];
    let trace = MotionTrace::new(video_id, SYNTH_FPS, frames(n), links, histograms, homographies)?;
    Ok(SynthTrace { trace, gaze })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillateParams {
    pub n: usize,
    /// Mean cycle length in frames.
    pub period: usize,
    /// Each cycle's length is drawn from `period ± period_jitter`.
    pub period_jitter: usize,
    pub amplitude: f64,
    pub noise: f64,
    pub flow: f64,
    pub max_skip: usize,
    pub seed: u64,
}

impl OscillateParams {
    pub fn new(n: usize, period: usize, seed: u64) -> Self {
        OscillateParams {
            n,
            period,
            period_jitter: period / 4,
            amplitude: 0.5,
            noise: 0.01,
            flow: 0.1,
            max_skip: 100,
            seed,
        }
    }
}

/// Head-mounted camera looking left and right while walking forward. Each
/// cycle starts with one forward-facing frame, then spends its first half
/// looking to one side and the rest looking to the other.
pub fn oscillating_gaze(p: &OscillateParams) -> Result<SynthTrace> {
    if p.n < 2 || p.period < 2 || p.period_jitter >= p.period || p.max_skip == 0 {
        return Err(Error::InvalidArgument(format!("invalid oscillation parameters: {p:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut gaze = Vec::with_capacity(p.n);
    while gaze.len() < p.n {
        let len = rng.random_range(p.period - p.period_jitter..=p.period + p.period_jitter);
        gaze.push(0.0);
        for k in 1..len {
            gaze.push(if k <= len / 2 { p.amplitude } else { -p.amplitude });
        }
    }
    gaze.truncate(p.n);
    let flow = vec![p.flow; p.n];
    gaze_trace("oscillate", gaze, &flow, p.noise, p.max_skip, &mut rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivingParams {
    pub n: usize,
    pub flick_every: usize,
    pub flick_len: usize,
    pub flick_gaze: f64,
    pub base_flow: f64,
    pub flick_flow: f64,
    pub noise: f64,
    pub max_skip: usize,
    pub seed: u64,
}

impl DrivingParams {
    pub fn new(n: usize, seed: u64) -> Self {
        DrivingParams {
            n,
            flick_every: 90,
            flick_len: 8,
            flick_gaze: 0.6,
            base_flow: 0.001,
            flick_flow: 3.0,
            noise: 0.01,
            max_skip: 20,
            seed,
        }
    }
}

/// Seated driver: the scene barely moves in the image except during brief
/// head turns, which carry almost all of the optical flow.
pub fn driving(p: &DrivingParams) -> Result<SynthTrace> {
    if p.n < 2 || p.flick_every == 0 || p.flick_len >= p.flick_every || p.max_skip == 0 {
        return Err(Error::InvalidArgument(format!("invalid driving parameters: {p:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let start = p.flick_every / 2;
    let in_flick = |t: usize| t >= start && (t - start) % p.flick_every < p.flick_len;
    let gaze = (0..p.n)
        .map(|t| {
            if !in_flick(t) {
                return 0.0;
            }
            let sign = if ((t - start) / p.flick_every) % 2 == 0 { 1.0 } else { -1.0 };
            sign * p.flick_gaze
        })
        .collect();
    let flow: Vec<f64> = (0..p.n)
        .map(|t| if in_flick(t) { p.flick_flow } else { p.base_flow })
        .collect();
    gaze_trace("driving", gaze, &flow, p.noise, p.max_skip, &mut rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomTraceOptions {
    pub p_foe: f64,
    pub p_missing: f64,
    /// Histogram bins per channel; zero leaves the trace without histograms.
    pub bins: usize,
    /// Add random consecutive homographies (translation plus small rotation).
    pub homographies: bool,
}

impl Default for RandomTraceOptions {
    fn default() -> Self {
        RandomTraceOptions {
            p_foe: 0.15,
            p_missing: 0.05,
            bins: 4,
            homographies: false,
        }
    }
}

fn random_histogram(bins: usize, rng: &mut ChaCha8Rng) -> ColorHistogram {
    let channel = |rng: &mut ChaCha8Rng| {
        let raw: Vec<f64> = (0..bins).map(|_| rng.random::<f64>() + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / s).collect::<Vec<_>>()
    };
    let c = [channel(rng), channel(rng), channel(rng)];
    ColorHistogram::from_channels(c).expect("channels are normalized")
}

/// Fully connected trace (every skip up to `tau`) with random directions,
/// flows and histograms.
pub fn random_trace(n: usize, tau: usize, seed: u64, opts: &RandomTraceOptions) -> Result<MotionTrace> {
    if n < 2 || tau == 0 {
        return Err(Error::InvalidArgument(format!("random trace needs n >= 2 and tau >= 1, got {n}, {tau}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_frame: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let mut cum = vec![0.0; n];
    for k in 1..n {
        cum[k] = cum[k - 1] + per_frame[k - 1];
    }
    let mut links = Vec::with_capacity(n * tau);
    for i in 0..n {
        for j in i + 1..=(i + tau).min(n - 1) {
            let u: f64 = rng.random();
            let source = if u < opts.p_missing {
                DirectionSource::Missing
            } else if u < opts.p_missing + opts.p_foe {
                DirectionSource::Foe
            } else {
                DirectionSource::Epipole
            };
            let direction = if source == DirectionSource::Missing {
                [0.0, 0.0]
            } else {
                [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]
            };
            links.push(MotionLink {
                src: i,
                dst: j,
                direction,
                source,
                flow_sum: (cum[j] - cum[i]) * rng.random_range(0.8..1.2),
            });
        }
    }
    let histograms = if opts.bins > 0 {
        (0..n).map(|_| random_histogram(opts.bins, &mut rng)).collect()
    } else {
        Vec::new()
    };
    let homographies = if opts.homographies {
        (0..n - 1)
            .map(|t| {
                let th: f64 = rng.random_range(-0.01..0.01);
                let (s, c) = th.sin_cos();
                HomographyLink {
                    src: t,
                    dst: t + 1,
                    h: Matrix3::new(
                        c,
                        -s,
                        rng.random_range(-8.0..8.0),
                        s,
                        c,
                        rng.random_range(-4.0..4.0),
                        0.0,
                        0.0,
                        1.0,
                    ),
                    tracked: true,
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    MotionTrace::new(format!("random-{seed}"), SYNTH_FPS, frames(n), links, histograms, homographies)
}
