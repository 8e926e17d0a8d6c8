//! C ABI over the planning engine.
//!
//! Traces and plans are opaque handles created and released through this
//! interface. Every fallible call returns an [`HlStatus`]; on failure a
//! description is available from [`hl_last_error_message`] on the same
//! thread. Strings returned by the library must be released with
//! [`hl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hyperlapse::cost::CostWeights;
use hyperlapse::dag::Solver;
use hyperlapse::eval::{eval_selection, EvalOptions, ImprovementDenominator};
use hyperlapse::panorama::smooth_crop_centers;
use hyperlapse::sampler::{solve_first_order_with, GraphSpec, SamplingPlan, DEFAULT_SKIP_WINDOW, DEFAULT_TAU};
use hyperlapse::second_order::{solve_second_order_with, SecondOrderOptions};
use hyperlapse::trace::{load_trace, MotionTrace};
use hyperlapse::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Invariant = 5,
    NoPath = 6,
    InvalidArgument = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HlSolver {
    DagDp = 0,
    Dijkstra = 1,
}

/// Opaque motion trace.
pub struct HlTrace(MotionTrace);

/// Opaque frame-sampling plan.
pub struct HlPlan(SamplingPlan);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HlWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub foe_penalty_c: f64,
    pub k_flow: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HlGraphSpec {
    pub n: usize,
    pub tau: usize,
    pub d_start: usize,
    pub d_end: usize,
    pub weights: HlWeights,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HlEvalResult {
    pub median_skip: usize,
    pub jitter_mean: f64,
    pub baseline_jitter_mean: f64,
    /// Meaningful only when `improvement_defined` is true.
    pub jitter_improvement_pct: f64,
    pub improvement_defined: bool,
    pub flow_starved: bool,
}

impl From<CostWeights> for HlWeights {
    fn from(w: CostWeights) -> Self {
        HlWeights {
            alpha: w.alpha,
            beta: w.beta,
            gamma: w.gamma,
            foe_penalty_c: w.foe_penalty_c,
            k_flow: w.k_flow,
        }
    }
}

impl From<HlWeights> for CostWeights {
    fn from(w: HlWeights) -> Self {
        CostWeights {
            alpha: w.alpha,
            beta: w.beta,
            gamma: w.gamma,
            foe_penalty_c: w.foe_penalty_c,
            k_flow: w.k_flow,
        }
    }
}

impl From<HlSolver> for Solver {
    fn from(s: HlSolver) -> Self {
        match s {
            HlSolver::DagDp => Solver::DagDp,
            HlSolver::Dijkstra => Solver::Dijkstra,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> HlStatus {
    match e {
        Error::Io { .. } => HlStatus::Io,
        Error::Parse(_) => HlStatus::Parse,
        Error::NoPath(_) => HlStatus::NoPath,
        Error::InvalidArgument(_) => HlStatus::InvalidArgument,
        _ => HlStatus::Invariant,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), HlStatus>) -> HlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            HlStatus::Panic
        }
    }
}

fn fail(e: Error) -> HlStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> HlStatus {
    set_error(format!("{what} is null"));
    HlStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, HlStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        HlStatus::InvalidUtf8
    })
}

unsafe fn trace_ref<'a>(t: *const HlTrace) -> Result<&'a MotionTrace, HlStatus> {
    t.as_ref().map(|t| &t.0).ok_or_else(|| null("trace"))
}

unsafe fn plan_ref<'a>(p: *const HlPlan) -> Result<&'a SamplingPlan, HlStatus> {
    p.as_ref().map(|p| &p.0).ok_or_else(|| null("plan"))
}

/// Message describing the last failed call on this thread, or null. Valid
/// until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn hl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn hl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads and validates a trace file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hl_trace_load(path: *const c_char, out: *mut *mut HlTrace) -> HlStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let t = load_trace(path).map_err(fail)?;
        *out = Box::into_raw(Box::new(HlTrace(t)));
        Ok(())
    })
}

/// Parses and validates a trace from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hl_trace_from_json(json: *const c_char, out: *mut *mut HlTrace) -> HlStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let t = MotionTrace::from_json_str(json).map_err(fail)?;
        *out = Box::into_raw(Box::new(HlTrace(t)));
        Ok(())
    })
}

/// Releases a trace. Null is ignored.
///
/// # Safety
/// `trace` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hl_trace_free(trace: *mut HlTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of frames, or 0 for null.
///
/// # Safety
/// `trace` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn hl_trace_frame_count(trace: *const HlTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.len())
}

/// Mean consecutive-frame flow.
///
/// # Safety
/// `trace` must be a live trace handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hl_trace_avg_flow(trace: *const HlTrace, out: *mut f64) -> HlStatus {
    guard(|| {
        let t = trace_ref(trace)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = t.avg_flow();
        Ok(())
    })
}

/// Default frame-sampling weights for the given desired flow per step.
#[no_mangle]
pub extern "C" fn hl_weights_default(k_flow: f64) -> HlWeights {
    CostWeights::sampling(k_flow).into()
}

/// Default graph parameters for `trace` at the given speedup, with the skip
/// bound and end windows clamped to the trace length.
///
/// # Safety
/// `trace` must be a live trace handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hl_graph_spec_default(trace: *const HlTrace, speedup: f64, out: *mut HlGraphSpec) -> HlStatus {
    guard(|| {
        let t = trace_ref(trace)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let w = CostWeights::sampling(speedup * t.avg_flow());
        let s = GraphSpec::clamped(t.len(), DEFAULT_TAU, DEFAULT_SKIP_WINDOW, DEFAULT_SKIP_WINDOW, w).map_err(fail)?;
        *out = HlGraphSpec {
            n: s.n,
            tau: s.tau,
            d_start: s.d_start,
            d_end: s.d_end,
            weights: s.weights.into(),
        };
        Ok(())
    })
}

unsafe fn graph_spec(spec: *const HlGraphSpec) -> Result<GraphSpec, HlStatus> {
    let s = spec.as_ref().ok_or_else(|| null("spec"))?;
    GraphSpec::new(s.n, s.tau, s.d_start, s.d_end, s.weights.into()).map_err(fail)
}

/// First-order sampling plan.
///
/// # Safety
/// `trace` and `spec` must be valid pointers and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hl_solve_first_order(
    trace: *const HlTrace,
    spec: *const HlGraphSpec,
    solver: HlSolver,
    out: *mut *mut HlPlan,
) -> HlStatus {
    guard(|| {
        let t = trace_ref(trace)?;
        let s = graph_spec(spec)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = solve_first_order_with(t, &s, solver.into()).map_err(fail)?;
        *out = Box::into_raw(Box::new(HlPlan(p)));
        Ok(())
    })
}

/// Second-order sampling plan. A NaN `alpha2` uses the shakiness weight.
///
/// # Safety
/// `trace` and `spec` must be valid pointers and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hl_solve_second_order(
    trace: *const HlTrace,
    spec: *const HlGraphSpec,
    solver: HlSolver,
    alpha2: f64,
    out: *mut *mut HlPlan,
) -> HlStatus {
    guard(|| {
        let t = trace_ref(trace)?;
        let s = graph_spec(spec)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let opts = SecondOrderOptions {
            alpha2: (!alpha2.is_nan()).then_some(alpha2),
            solver: solver.into(),
        };
        let p = solve_second_order_with(t, &s, opts).map_err(fail)?;
        *out = Box::into_raw(Box::new(HlPlan(p)));
        Ok(())
    })
}

/// Number of selected frames, or 0 for null.
///
/// # Safety
/// `plan` must be null or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn hl_plan_len(plan: *const HlPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.0.selected.len())
}

/// Copies up to `capacity` selected frame indices into `buf` and stores the
/// full count in `written`.
///
/// # Safety
/// `buf` must hold `capacity` elements; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hl_plan_selected(
    plan: *const HlPlan,
    buf: *mut usize,
    capacity: usize,
    written: *mut usize,
) -> HlStatus {
    guard(|| {
        let p = plan_ref(plan)?;
        if written.is_null() || (buf.is_null() && capacity > 0) {
            return Err(null("output buffer"));
        }
        let k = p.selected.len().min(capacity);
        if k > 0 {
            ptr::copy_nonoverlapping(p.selected.as_ptr(), buf, k);
        }
        *written = p.selected.len();
        Ok(())
    })
}

/// Total cost of the plan, or NaN for null.
///
/// # Safety
/// `plan` must be null or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn hl_plan_total_cost(plan: *const HlPlan) -> f64 {
    plan.as_ref().map_or(f64::NAN, |p| p.0.total_cost)
}

/// Plan as JSON; release the string with `hl_string_free`.
///
/// # Safety
/// `plan` must be a live plan handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hl_plan_to_json(plan: *const HlPlan, out: *mut *mut c_char) -> HlStatus {
    guard(|| {
        let p = plan_ref(plan)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = p.to_json_string();
        *out = CString::new(s).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// Releases a plan. Null is ignored.
///
/// # Safety
/// `plan` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hl_plan_free(plan: *mut HlPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Plan metrics against a uniform baseline with the given skip, using the
/// plan-jitter denominator.
///
/// # Safety
/// `trace` and `plan` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hl_eval_plan(
    trace: *const HlTrace,
    plan: *const HlPlan,
    spec: *const HlGraphSpec,
    baseline_skip: usize,
    out: *mut HlEvalResult,
) -> HlStatus {
    guard(|| {
        let t = trace_ref(trace)?;
        let p = plan_ref(plan)?;
        let s = spec.as_ref().ok_or_else(|| null("spec"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let opts = EvalOptions {
            baseline_skip,
            denominator: ImprovementDenominator::Plan,
            k_flow: s.weights.k_flow,
            tau: s.tau,
        };
        let m = eval_selection(t, &p.selected, &opts).map_err(fail)?;
        *out = HlEvalResult {
            median_skip: m.median_skip,
            jitter_mean: m.jitter_mean,
            baseline_jitter_mean: m.baseline_jitter_mean,
            jitter_improvement_pct: m.jitter_improvement_pct.unwrap_or(f64::NAN),
            improvement_defined: m.jitter_improvement_pct.is_some(),
            flow_starved: m.flow_starved,
        };
        Ok(())
    })
}

/// Smooths `n` crop centers given as interleaved `x, y` pairs in `mass_xy`,
/// writing `n` pairs to `out_xy`.
///
/// # Safety
/// Both arrays must hold `2 * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn hl_smooth_crop_path(mass_xy: *const f64, n: usize, lambda: f64, out_xy: *mut f64) -> HlStatus {
    guard(|| {
        if n == 0 {
            return Ok(());
        }
        if mass_xy.is_null() || out_xy.is_null() {
            return Err(null("point array"));
        }
        let flat = std::slice::from_raw_parts(mass_xy, 2 * n);
        let m: Vec<[f64; 2]> = flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let cr = smooth_crop_centers(&m, lambda).map_err(fail)?;
        let out = std::slice::from_raw_parts_mut(out_xy, 2 * n);
        for (k, c) in cr.iter().enumerate() {
            out[2 * k] = c[0];
            out[2 * k + 1] = c[1];
        }
        Ok(())
    })
}
