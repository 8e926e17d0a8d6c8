use std::path::Path;
use std::process::Command;

use hyperlapse::cli::run;
use hyperlapse::cost::k_flow_for_speedup;
use hyperlapse::eval::{
    eval_selection, median_skip, write_epipole_csv, EvalOptions, EvalReport, ImprovementDenominator,
};
use hyperlapse::sampler::uniform_plan;
use hyperlapse::synth::{oscillating_gaze, OscillateParams};
use hyperlapse::trace::{load_trace, save_trace};
use proptest::prelude::*;
use serde_json::Value;

fn opts(skip: usize) -> EvalOptions {
    EvalOptions { baseline_skip: skip, denominator: ImprovementDenominator::Plan, k_flow: 1.0, tau: 100 }
}

fn s(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn hl(args: &[&str]) -> i32 {
    run(std::iter::once("hyperlapse").chain(args.iter().copied()))
}

fn metrics(path: &Path) -> Value {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["metrics"].clone()
}

// ---------------------------------------------------------------------------
// Metrics

#[test]
fn median_skip_examples() {
    assert_eq!(median_skip(&[0, 10, 20, 30]), Some(10));
    // Gaps 17, 17, 4, 48.
    assert_eq!(median_skip(&[0, 17, 34, 38, 86]), Some(17));
    assert_eq!(median_skip(&[]), None);
}

proptest! {
    #[test]
    fn median_skip_is_the_lower_middle_gap(gaps in prop::collection::vec(1usize..50, 1..40)) {
        let mut sel = vec![0];
        for g in &gaps {
            sel.push(sel.last().unwrap() + g);
        }
        let m = median_skip(&sel).unwrap();
        let below = gaps.iter().filter(|&&g| g < m).count();
        let at_most = gaps.iter().filter(|&&g| g <= m).count();
        prop_assert!(gaps.contains(&m));
        prop_assert!(2 * below < gaps.len() && 2 * at_most >= gaps.len());
    }

    #[test]
    fn baseline_against_itself_improves_by_zero(seed in any::<u64>(), skip in 1usize..20) {
        let t = oscillating_gaze(&OscillateParams::new(400, 10, seed)).unwrap().trace;
        let base = uniform_plan(t.len(), skip, 0).unwrap();
        for denominator in [ImprovementDenominator::Plan, ImprovementDenominator::Baseline] {
            let m = eval_selection(&t, &base.selected, &EvalOptions { denominator, ..opts(skip) }).unwrap();
            prop_assert_eq!(m.jitter_improvement_pct, Some(0.0));
            prop_assert_eq!(m.jitter_mean, m.baseline_jitter_mean);
            prop_assert_eq!(m.median_skip, skip);
        }
    }
}

#[test]
fn evaluation_is_deterministic() {
    let t = oscillating_gaze(&OscillateParams::new(500, 10, 3)).unwrap().trace;
    let sel: Vec<usize> = (0..500).step_by(7).collect();
    let o = EvalOptions { k_flow: k_flow_for_speedup(&t, 10.0), ..opts(10) };
    let a = eval_selection(&t, &sel, &o).unwrap();
    assert_eq!(a, eval_selection(&t, &sel, &o).unwrap());
    let (mut x, mut y) = (Vec::new(), Vec::new());
    write_epipole_csv(&mut x, &t, &sel, 10).unwrap();
    write_epipole_csv(&mut y, &t, &sel, 10).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    // Header plus one row per transition of the longer selection.
    assert_eq!(text.lines().count(), 1 + (sel.len() - 1).max(50 - 1));
}

#[test]
fn bad_selections_are_rejected() {
    let t = oscillating_gaze(&OscillateParams::new(50, 10, 0)).unwrap().trace;
    assert!(eval_selection(&t, &[3], &opts(10)).is_err());
    assert!(eval_selection(&t, &[3, 3], &opts(10)).is_err());
    assert!(eval_selection(&t, &[3, 50], &opts(10)).is_err());
    assert!(eval_selection(&t, &[0, 5], &opts(0)).is_err());
}

// ---------------------------------------------------------------------------
// Command line

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = s(&dir.path().join("nope.json"));
    let out = s(&dir.path().join("plan.json"));
    assert_eq!(hl(&["--help"]), 0);
    assert_eq!(hl(&["--version"]), 0);
    assert_eq!(hl(&["sample", "--bogus"]), 1);
    assert_eq!(hl(&[]), 1);
    assert_eq!(hl(&["sample", "--trace", &missing, "--out", &out]), 2);

    let trace = s(&dir.path().join("t.json"));
    assert_eq!(hl(&["synth", "--kind", "oscillate", "--n", "200", "--out", &trace]), 0);
    assert_eq!(hl(&["sample", "--trace", &trace, "--out", &out, "--tau", "0"]), 1);
    std::fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    assert_eq!(hl(&["sample", "--trace", &s(&dir.path().join("bad.json")), "--out", &out]), 2);
    assert!(!Path::new(&out).exists());
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["oscillate", "driving", "random"] {
        let a = dir.path().join(format!("{kind}-a.json"));
        let b = dir.path().join(format!("{kind}-b.json"));
        for p in [&a, &b] {
            assert_eq!(hl(&["synth", "--kind", kind, "--n", "120", "--seed", "9", "--out", &s(p)]), 0);
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{kind}");
        load_trace(&a).unwrap();
    }
}

#[test]
fn planners_write_plans_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| s(&dir.path().join(name));
    let trace = p("t.json");
    assert_eq!(hl(&["synth", "--kind", "oscillate", "--n", "600", "--seed", "1", "--out", &trace]), 0);

    for cmd in ["sample", "sample2"] {
        let (plan, report) = (p(&format!("{cmd}.json")), p(&format!("{cmd}-report.json")));
        assert_eq!(hl(&[cmd, "--trace", &trace, "--out", &plan, "--report", &report]), 0);
        let m = metrics(Path::new(&report));
        assert!(m["median_skip"].as_u64().unwrap() >= 1);
        // Re-evaluating the written plan gives the same metrics.
        let again = p(&format!("{cmd}-eval.json"));
        assert_eq!(hl(&["eval", "--trace", &trace, "--plan", &plan, "--out", &again]), 0);
        assert_eq!(metrics(Path::new(&again)), m);
    }

    let (plan, report) = (p("pano.json"), p("pano-report.json"));
    assert_eq!(hl(&["pano", "--trace", &trace, "--out", &plan, "--report", &report, "--omega", "20"]), 0);
    assert!(metrics(Path::new(&report))["fov_ratio_pct"].as_f64().unwrap() > 0.0);
    let csv = p("pano.csv");
    let again = p("pano-eval.json");
    assert_eq!(hl(&["eval", "--trace", &trace, "--plan", &plan, "--out", &again, "--csv", &csv]), 0);
    assert_eq!(metrics(Path::new(&again)), metrics(Path::new(&report)));
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("step,plan_frame"));

    let second = p("t2.json");
    assert_eq!(hl(&["synth", "--kind", "oscillate", "--n", "600", "--seed", "2", "--out", &second]), 0);
    let (plan, report) = (p("multi.json"), p("multi-report.json"));
    assert_eq!(
        hl(&["multi", "--trace", &trace, "--trace", &second, "--out", &plan, "--report", &report, "--omega", "10"]),
        0
    );
    let m = metrics(Path::new(&report));
    assert_eq!(m["switches"], 0);
    // Reports parse back into the typed form.
    let r: EvalReport = serde_json::from_str(&std::fs::read_to_string(p("sample-report.json")).unwrap()).unwrap();
    assert!(r.timing_ms.contains_key("solve"));
}

#[test]
fn reports_differ_only_in_timing() {
    let dir = tempfile::tempdir().unwrap();
    let t = oscillating_gaze(&OscillateParams::new(300, 10, 4)).unwrap().trace;
    let trace = dir.path().join("t.json");
    save_trace(&t, &trace).unwrap();
    let mut seen = Vec::new();
    for i in 0..2 {
        let (plan, report) = (dir.path().join(format!("p{i}.json")), dir.path().join(format!("r{i}.json")));
        assert_eq!(hl(&["sample", "--trace", &s(&trace), "--out", &s(&plan), "--report", &s(&report)]), 0);
        seen.push((std::fs::read(&plan).unwrap(), metrics(&report)));
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn binary_reports_usage_errors() {
    let bin = env!("CARGO_BIN_EXE_hyperlapse");
    let out = Command::new(bin).arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    let out = Command::new(bin).args(["eval", "--trace", "/nonexistent/t.json", "--plan", "/nonexistent/p.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
