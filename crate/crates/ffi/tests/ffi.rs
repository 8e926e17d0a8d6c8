use std::ffi::{CStr, CString};
use std::ptr;

use hyperlapse::cost::CostWeights;
use hyperlapse::panorama::smooth_crop_centers;
use hyperlapse::sampler::{solve_first_order, GraphSpec, SamplingPlan};
use hyperlapse::synth::{random_trace, RandomTraceOptions};
use hyperlapse::trace::MotionTrace;
use hyperlapse_ffi::*;

fn trace_json() -> (MotionTrace, CString) {
    let t = random_trace(60, 8, 3, &RandomTraceOptions::default()).unwrap();
    let json = CString::new(t.to_json_string()).unwrap();
    (t, json)
}

unsafe fn load(json: &CStr) -> *mut HlTrace {
    let mut h = ptr::null_mut();
    assert_eq!(hl_trace_from_json(json.as_ptr(), &mut h), HlStatus::Ok);
    assert!(!h.is_null());
    h
}

unsafe fn spec_for(trace: *const HlTrace) -> HlGraphSpec {
    let mut s = std::mem::zeroed::<HlGraphSpec>();
    assert_eq!(hl_graph_spec_default(trace, 4.0, &mut s), HlStatus::Ok);
    s.tau = 8;
    s.d_start = 5;
    s.d_end = 5;
    s
}

fn last_error() -> String {
    let p = hl_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn first_order_matches_core() {
    let (t, json) = trace_json();
    unsafe {
        let h = load(&json);
        assert_eq!(hl_trace_frame_count(h), 60);
        let s = spec_for(h);
        let mut plan = ptr::null_mut();
        assert_eq!(hl_solve_first_order(h, &s, HlSolver::DagDp, &mut plan), HlStatus::Ok);

        let core_spec = GraphSpec::new(60, 8, 5, 5, CostWeights::sampling(s.weights.k_flow)).unwrap();
        let want = solve_first_order(&t, &core_spec).unwrap();

        let len = hl_plan_len(plan);
        assert_eq!(len, want.selected.len());
        let mut buf = vec![0usize; len];
        let mut written = 0;
        assert_eq!(hl_plan_selected(plan, buf.as_mut_ptr(), len, &mut written), HlStatus::Ok);
        assert_eq!(written, len);
        assert_eq!(buf, want.selected);
        assert_eq!(hl_plan_total_cost(plan), want.total_cost);

        let mut text = ptr::null_mut();
        assert_eq!(hl_plan_to_json(plan, &mut text), HlStatus::Ok);
        let round = SamplingPlan::from_json_str(CStr::from_ptr(text).to_str().unwrap()).unwrap();
        assert_eq!(round, want);
        hl_string_free(text);

        let mut dj = ptr::null_mut();
        assert_eq!(hl_solve_first_order(h, &s, HlSolver::Dijkstra, &mut dj), HlStatus::Ok);
        assert_eq!(hl_plan_total_cost(dj), want.total_cost);
        hl_plan_free(dj);
        hl_plan_free(plan);
        hl_trace_free(h);
    }
}

#[test]
fn short_buffer_reports_full_count() {
    let (_, json) = trace_json();
    unsafe {
        let h = load(&json);
        let s = spec_for(h);
        let mut plan = ptr::null_mut();
        assert_eq!(hl_solve_second_order(h, &s, HlSolver::DagDp, f64::NAN, &mut plan), HlStatus::Ok);
        let mut one = [usize::MAX; 1];
        let mut written = 0;
        assert_eq!(hl_plan_selected(plan, one.as_mut_ptr(), 1, &mut written), HlStatus::Ok);
        assert_eq!(written, hl_plan_len(plan));
        assert!(one[0] < 5);
        hl_plan_free(plan);
        hl_trace_free(h);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(hl_trace_from_json(ptr::null(), &mut h), HlStatus::NullPointer);
        assert!(last_error().contains("null"));

        let bad = CString::new("{not json").unwrap();
        assert_eq!(hl_trace_from_json(bad.as_ptr(), &mut h), HlStatus::Parse);
        assert!(h.is_null());

        let missing = CString::new("/nonexistent/trace.json").unwrap();
        assert_eq!(hl_trace_load(missing.as_ptr(), &mut h), HlStatus::Io);

        let (_, json) = trace_json();
        let t = load(&json);
        let mut s = spec_for(t);
        s.tau = 0;
        let mut plan = ptr::null_mut();
        assert_eq!(hl_solve_first_order(t, &s, HlSolver::DagDp, &mut plan), HlStatus::InvalidArgument);
        assert!(plan.is_null());

        // Success clears the previous message.
        let mut flow = 0.0;
        assert_eq!(hl_trace_avg_flow(t, &mut flow), HlStatus::Ok);
        assert!(flow > 0.0);
        assert!(hl_last_error_message().is_null());
        hl_trace_free(t);
    }
}

#[test]
fn null_handles_are_tolerated() {
    unsafe {
        hl_trace_free(ptr::null_mut());
        hl_plan_free(ptr::null_mut());
        hl_string_free(ptr::null_mut());
        assert_eq!(hl_trace_frame_count(ptr::null()), 0);
        assert_eq!(hl_plan_len(ptr::null()), 0);
        assert!(hl_plan_total_cost(ptr::null()).is_nan());
    }
}

#[test]
fn eval_of_plan() {
    let (_, json) = trace_json();
    unsafe {
        let h = load(&json);
        let s = spec_for(h);
        let mut plan = ptr::null_mut();
        assert_eq!(hl_solve_first_order(h, &s, HlSolver::DagDp, &mut plan), HlStatus::Ok);
        let mut r = std::mem::zeroed::<HlEvalResult>();
        assert_eq!(hl_eval_plan(h, plan, &s, 4, &mut r), HlStatus::Ok);
        assert!(r.median_skip >= 1 && r.median_skip <= 8);
        assert!(r.jitter_mean.is_finite());
        assert_eq!(r.improvement_defined, !r.jitter_improvement_pct.is_nan());
        hl_plan_free(plan);
        hl_trace_free(h);
    }
}

#[test]
fn crop_path_matches_core() {
    let m = [[0.0, 0.0], [10.0, 4.0], [-3.0, 8.0], [5.0, 5.0], [1.0, -2.0]];
    let flat: Vec<f64> = m.iter().flatten().copied().collect();
    let mut out = vec![0.0; flat.len()];
    let st = unsafe { hl_smooth_crop_path(flat.as_ptr(), m.len(), 15.0, out.as_mut_ptr()) };
    assert_eq!(st, HlStatus::Ok);
    let want: Vec<f64> = smooth_crop_centers(&m, 15.0).unwrap().into_iter().flatten().collect();
    assert_eq!(out, want);
    assert_eq!(unsafe { hl_smooth_crop_path(ptr::null(), 0, 15.0, ptr::null_mut()) }, HlStatus::Ok);
}

#[test]
fn default_weights_and_version() {
    let w = hl_weights_default(2.5);
    assert_eq!(CostWeights::from_ffi(w), CostWeights::sampling(2.5));
    let v = unsafe { CStr::from_ptr(hl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/hyperlapse.h")).unwrap();
    for f in [
        "hl_trace_load",
        "hl_trace_from_json",
        "hl_trace_free",
        "hl_solve_first_order",
        "hl_solve_second_order",
        "hl_plan_selected",
        "hl_plan_to_json",
        "hl_string_free",
        "hl_eval_plan",
        "hl_smooth_crop_path",
        "hl_last_error_message",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct HlTrace HlTrace;"));
}

trait FromFfi {
    fn from_ffi(w: HlWeights) -> Self;
}

impl FromFfi for CostWeights {
    fn from_ffi(w: HlWeights) -> Self {
        w.into()
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let src = std::env::temp_dir().join(format!("hl_header_{}.c", std::process::id()));
    std::fs::write(
        &src,
        "#include \"hyperlapse.h\"\nint main(void) { HlGraphSpec s; (void)s; return hl_version() == 0; }\n",
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", dir])
        .arg(&src)
        .status();
    let _ = std::fs::remove_file(&src);
    match status {
        Ok(s) => assert!(s.success(), "header failed to compile"),
        Err(_) => eprintln!("no C compiler found; skipping"),
    }
}
