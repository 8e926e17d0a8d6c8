//! Command-line front end. `run` returns the process exit status: 0 on
//! success, 1 for bad flags or arguments, 2 when a file or plan is invalid.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::cost::{k_flow_for_speedup, CostWeights};
use crate::dag::Solver;
use crate::error::{Error, Result};
use crate::eval::{eval_selection, write_epipole_csv, EvalOptions, EvalReport, ImprovementDenominator, DEFAULT_BASELINE_SKIP};
use crate::multi::{finalize_correspondence, load_correspondences, plan_multi, MultiConfig, Timeline, DEFAULT_CROSS_MULT};
use crate::panorama::plan::{DEFAULT_LAMBDA, DEFAULT_OMEGA};
use crate::panorama::{plan_panoramas, FovSign, PanoramaConfig, PanoramaPlan};
use crate::sampler::{solve_first_order_with, GraphSpec, SamplingPlan, DEFAULT_SKIP_WINDOW, DEFAULT_TAU};
use crate::second_order::{solve_second_order_with, SecondOrderOptions};
use crate::synth::{driving, oscillating_gaze, random_trace, DrivingParams, OscillateParams, RandomTraceOptions};
use crate::trace::{load_trace, save_trace, MotionTrace};

#[derive(Debug, Parser)]
#[command(name = "hyperlapse", version, about = "Plan hyperlapse frame selections and panoramas from motion traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// First-order frame sampling.
    Sample(SampleArgs),
    /// Second-order frame sampling (penalizes changes of motion direction).
    Sample2(Sample2Args),
    /// Panoramic hyperlapse for one video.
    Pano(PanoArgs),
    /// Panoramic hyperlapse across several videos.
    Multi(MultiArgs),
    /// Metrics for a plan against a uniform baseline.
    Eval(EvalArgs),
    /// Write a seeded synthetic trace.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Dag,
    Dijkstra,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Dag => Solver::DagDp,
            SolverArg::Dijkstra => Solver::Dijkstra,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FovSignArg {
    Deficit,
    Literal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TimelineArg {
    Synchronized,
    Reference,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DenominatorArg {
    Plan,
    Baseline,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SynthKind {
    Oscillate,
    Driving,
    Random,
}

/// Options shared by every planner.
#[derive(Debug, Args)]
struct PlanArgs {
    /// Output plan file.
    #[arg(long)]
    out: PathBuf,
    /// Write the evaluation report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Target speedup; the desired flow per step is this times the mean
    /// consecutive-frame flow.
    #[arg(long, default_value_t = 10.0)]
    speedup: f64,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: usize,
    #[arg(long, default_value_t = DEFAULT_SKIP_WINDOW)]
    dstart: usize,
    #[arg(long, default_value_t = DEFAULT_SKIP_WINDOW)]
    dend: usize,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Shakiness multiplier for FOE-derived directions.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, value_enum, default_value = "dag")]
    solver: SolverArg,
    /// Uniform skip of the evaluation baseline.
    #[arg(long, default_value_t = DEFAULT_BASELINE_SKIP)]
    baseline_skip: usize,
}

impl PlanArgs {
    fn weights(&self, defaults: CostWeights) -> CostWeights {
        CostWeights {
            alpha: self.alpha.unwrap_or(defaults.alpha),
            beta: self.beta.unwrap_or(defaults.beta),
            gamma: self.gamma.unwrap_or(defaults.gamma),
            foe_penalty_c: self.c.unwrap_or(defaults.foe_penalty_c),
            k_flow: defaults.k_flow,
        }
    }

    fn eval_options(&self, k_flow: f64) -> EvalOptions {
        EvalOptions {
            baseline_skip: self.baseline_skip,
            denominator: ImprovementDenominator::Plan,
            k_flow,
            tau: self.tau,
        }
    }
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Debug, Args)]
struct Sample2Args {
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    plan: PlanArgs,
    /// Weight of the direction-change term (defaults to alpha).
    #[arg(long)]
    alpha2: Option<f64>,
}

#[derive(Debug, Args)]
struct PanoOptions {
    #[arg(long, default_value_t = DEFAULT_OMEGA)]
    omega: usize,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "deficit")]
    fov_sign: FovSignArg,
}

#[derive(Debug, Args)]
struct PanoArgs {
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    plan: PlanArgs,
    #[command(flatten)]
    pano: PanoOptions,
}

#[derive(Debug, Args)]
struct MultiArgs {
    /// Trace of each video; the first is the reference.
    #[arg(long = "trace", required = true)]
    traces: Vec<PathBuf>,
    /// Raw correspondence file(s).
    #[arg(long = "corr")]
    corr: Vec<PathBuf>,
    #[command(flatten)]
    plan: PlanArgs,
    #[command(flatten)]
    pano: PanoOptions,
    #[arg(long, default_value_t = DEFAULT_CROSS_MULT)]
    cross_mult: f64,
    #[arg(long, value_enum, default_value = "synchronized")]
    timeline: TimelineArg,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    /// Report file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BASELINE_SKIP)]
    baseline_skip: usize,
    #[arg(long, value_enum, default_value = "plan")]
    improvement_denominator: DenominatorArg,
    #[arg(long, default_value_t = 10.0)]
    speedup: f64,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: usize,
    /// Also write per-step epipoles of plan and baseline as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    period: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Longest link written (defaults: 100, 20 for driving).
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) => 1,
                _ => 2,
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Sample(a) => sample(&a.trace, &a.plan, None),
        Command::Sample2(a) => sample(&a.trace, &a.plan, Some(a.alpha2)),
        Command::Pano(a) => pano(&a),
        Command::Multi(a) => multi(&a),
        Command::Eval(a) => eval(&a),
        Command::Synth(a) => synth(&a),
    }
}

fn load(path: &Path) -> Result<MotionTrace> {
    load_trace(path).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        Error::Invariant { frame, reason } => Error::Invariant {
            frame,
            reason: format!("{reason} ({})", path.display()),
        },
        e => e,
    })
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1000.0
}

fn write_json(path: Option<&Path>, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    match path {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| Error::io(p, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn sample(trace_path: &Path, args: &PlanArgs, second: Option<Option<f64>>) -> Result<()> {
    let mut timing = BTreeMap::new();
    let t = Instant::now();
    let trace = load(trace_path)?;
    timing.insert("load".to_string(), ms(t));
    let k = k_flow_for_speedup(&trace, args.speedup);
    let weights = args.weights(CostWeights::sampling(k));
    if args.tau == 0 || args.dstart == 0 || args.dend == 0 {
        return Err(Error::InvalidArgument("--tau, --dstart and --dend must be at least 1".into()));
    }
    let spec = GraphSpec::clamped(trace.len(), args.tau, args.dstart, args.dend, weights)?;
    let t = Instant::now();
    let plan: SamplingPlan = match second {
        None => solve_first_order_with(&trace, &spec, args.solver.into())?,
        Some(alpha2) => solve_second_order_with(
            &trace,
            &spec,
            SecondOrderOptions {
                alpha2,
                solver: args.solver.into(),
            },
        )?,
    };
    timing.insert("solve".to_string(), ms(t));
    plan.check(&spec)?;
    let text = serde_json::to_string_pretty(&plan).expect("plan serializes");
    std::fs::write(&args.out, text + "\n").map_err(|e| Error::io(&args.out, e))?;
    let t = Instant::now();
    let metrics = eval_selection(&trace, &plan.selected, &args.eval_options(k))?;
    timing.insert("eval".to_string(), ms(t));
    write_json(args.report.as_deref(), &EvalReport { metrics, timing_ms: timing })
}

fn pano_config(args: &PlanArgs, pano: &PanoOptions, k: f64) -> PanoramaConfig {
    let mut c = PanoramaConfig::new(k);
    c.omega = pano.omega;
    c.lambda = pano.lambda;
    c.weights = args.weights(c.weights);
    c.sampling.tau = args.tau;
    c.sampling.d_start = args.dstart;
    c.sampling.d_end = args.dend;
    c.sampling.solver = args.solver.into();
    c.sampling.fov_sign = match pano.fov_sign {
        FovSignArg::Deficit => FovSign::Deficit,
        FovSignArg::Literal => FovSign::Literal,
    };
    c
}

fn finish_panorama(
    plan: &PanoramaPlan,
    trace: &MotionTrace,
    args: &PlanArgs,
    k: f64,
    mut timing: BTreeMap<String, f64>,
) -> Result<()> {
    plan.check()?;
    plan.save(&args.out)?;
    let t = Instant::now();
    let centers = plan.selected_centers();
    let mut metrics = eval_selection(trace, &centers, &args.eval_options(k))?;
    metrics.fov_ratio_pct = Some(plan.fov_ratio_pct());
    timing.insert("eval".to_string(), ms(t));
    write_json(args.report.as_deref(), &EvalReport { metrics, timing_ms: timing })
}

fn pano(a: &PanoArgs) -> Result<()> {
    let mut timing = BTreeMap::new();
    let t = Instant::now();
    let trace = load(&a.trace)?;
    timing.insert("load".to_string(), ms(t));
    let k = k_flow_for_speedup(&trace, a.plan.speedup);
    let config = pano_config(&a.plan, &a.pano, k);
    let t = Instant::now();
    let plan = plan_panoramas(&trace, &config)?;
    timing.insert("plan".to_string(), ms(t));
    finish_panorama(&plan, &trace, &a.plan, k, timing)
}

fn multi(a: &MultiArgs) -> Result<()> {
    let mut timing = BTreeMap::new();
    let t = Instant::now();
    let traces = a.traces.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
    let mut raw = Vec::new();
    for p in &a.corr {
        raw.extend(load_correspondences(p)?);
    }
    timing.insert("load".to_string(), ms(t));
    let t = Instant::now();
    let table = finalize_correspondence(&raw);
    timing.insert("correspondence".to_string(), ms(t));
    let mean_flow = traces.iter().map(MotionTrace::avg_flow).sum::<f64>() / traces.len() as f64;
    let k = a.plan.speedup * mean_flow;
    let config = MultiConfig {
        panorama: pano_config(&a.plan, &a.pano, k),
        cross_mult: a.cross_mult,
        timeline: match a.timeline {
            TimelineArg::Synchronized => Timeline::Synchronized,
            TimelineArg::Reference => Timeline::Reference,
        },
    };
    let t = Instant::now();
    let plan = plan_multi(&traces, &table, &config)?;
    timing.insert("plan".to_string(), ms(t));
    log::info!("{} video switches", plan.switches);
    plan.plan.check()?;
    plan.plan.save(&a.plan.out)?;
    let mut report = serde_json::Map::new();
    report.insert("switches".into(), plan.switches.into());
    report.insert("selected".into(), plan.plan.selected.len().into());
    report.insert("fov_ratio_pct".into(), plan.plan.fov_ratio_pct().into());
    report.insert("total_cost".into(), plan.plan.total_cost.into());
    let mut out = serde_json::Map::new();
    out.insert("metrics".into(), Value::Object(report));
    out.insert("timing_ms".into(), serde_json::to_value(timing).expect("timings serialize"));
    write_json(a.plan.report.as_deref(), &out)
}

enum LoadedPlan {
    Sampling(SamplingPlan),
    Panorama(PanoramaPlan),
}

fn load_plan(path: &Path) -> Result<LoadedPlan> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if value.get("panoramas").is_some() {
        PanoramaPlan::from_json_str(&text)
            .map(LoadedPlan::Panorama)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    } else {
        serde_json::from_value(value)
            .map(LoadedPlan::Sampling)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

fn eval(a: &EvalArgs) -> Result<()> {
    let mut timing = BTreeMap::new();
    let t = Instant::now();
    let trace = load(&a.trace)?;
    let plan = load_plan(&a.plan)?;
    timing.insert("load".to_string(), ms(t));
    let opts = EvalOptions {
        baseline_skip: a.baseline_skip,
        denominator: match a.improvement_denominator {
            DenominatorArg::Plan => ImprovementDenominator::Plan,
            DenominatorArg::Baseline => ImprovementDenominator::Baseline,
        },
        k_flow: k_flow_for_speedup(&trace, a.speedup),
        tau: a.tau,
    };
    let t = Instant::now();
    let (selected, fov) = match &plan {
        LoadedPlan::Sampling(p) => (p.selected.clone(), None),
        LoadedPlan::Panorama(p) => (p.selected_centers(), Some(p.fov_ratio_pct())),
    };
    let mut metrics = eval_selection(&trace, &selected, &opts)?;
    metrics.fov_ratio_pct = fov;
    timing.insert("eval".to_string(), ms(t));
    if let Some(csv) = &a.csv {
        let mut f = std::fs::File::create(csv).map_err(|e| Error::io(csv, e))?;
        write_epipole_csv(&mut f, &trace, &selected, a.baseline_skip)?;
    }
    write_json(a.out.as_deref(), &EvalReport { metrics, timing_ms: timing })
}

fn synth(a: &SynthArgs) -> Result<()> {
    let trace = match a.kind {
        SynthKind::Oscillate => {
            let mut p = OscillateParams::new(a.n, a.period, a.seed);
            p.max_skip = a.tau.unwrap_or(p.max_skip);
            oscillating_gaze(&p)?.trace
        }
        SynthKind::Driving => {
            let mut p = DrivingParams::new(a.n, a.seed);
            p.max_skip = a.tau.unwrap_or(p.max_skip);
            driving(&p)?.trace
        }
        SynthKind::Random => {
            let opts = RandomTraceOptions {
                homographies: true,
                ..RandomTraceOptions::default()
            };
            random_trace(a.n, a.tau.unwrap_or(DEFAULT_TAU), a.seed, &opts)?
        }
    };
    save_trace(&trace, &a.out)
}
