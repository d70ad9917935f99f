use std::io::Write;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use stagewatch_core::eval::{
    aggregate, pair_runs, read_timelines, timelines_to_csv, EfficiencyReport, EvalError, Table, Timeline,
};
use stagewatch_core::sim::{replay_scenario, simulate_run, Cohort, PaceProfile, ScenarioEvent};
use stagewatch_core::workspace::{reference_plan, AssemblyPlan, EngineConfig, PlanLoadError};

use crate::output::write_atomic;
use crate::{CliError, EvaluateArgs, Format, ModelArgs, ReportArgs, RunArgs, ServeArgs, SimulateArgs};

/// Cohort label of timelines produced by `run`.
pub const REPLAY_COHORT: &str = "replay";

fn invalid(e: impl ToString) -> CliError {
    CliError::Validation(e.to_string())
}

fn eval_error(e: EvalError) -> CliError {
    match e {
        EvalError::Io(_) => CliError::Io(e.to_string()),
        other => invalid(other),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn load_plan(path: Option<&Path>) -> Result<Arc<AssemblyPlan>, CliError> {
    let plan = match path {
        None => reference_plan(),
        Some(p) => AssemblyPlan::load(p).map_err(|e| match e {
            PlanLoadError::Io { .. } => CliError::Io(e.to_string()),
            PlanLoadError::Parse(_) => invalid(e),
        })?,
    };
    if let Err(violations) = plan.validate() {
        let lines: Vec<String> = violations.iter().map(|v| format!("  - {v}")).collect();
        return Err(invalid(format!("invalid plan:\n{}", lines.join("\n"))));
    }
    Ok(Arc::new(plan))
}

fn engine_config(model: &ModelArgs) -> Result<EngineConfig, CliError> {
    let config = EngineConfig { frame_period_ms: model.frame_period_ms()?, ..EngineConfig::default() };
    config.validate().map_err(invalid)?;
    Ok(config)
}

/// Maps `f` over `items` on all cores, keeping input order.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if items.is_empty() {
        return Vec::new();
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len());
    let chunk = items.len().div_ceil(workers);
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(f).collect::<Vec<R>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("simulation worker panicked")).collect()
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulateSummary {
    pub runs: usize,
    pub completed: usize,
    pub truth_path: PathBuf,
    pub pred_path: PathBuf,
}

/// Simulates `runs` runs per selected cohort. Run `k` (counting across
/// cohorts, fast first) uses seed `seed + k` and is named `<cohort>-<k>`.
pub fn simulate(args: &SimulateArgs) -> Result<SimulateSummary, CliError> {
    let plan = load_plan(args.plan.as_deref())?;
    let config = engine_config(&args.model)?;
    let (lag, noise) = (args.model.lag(), args.model.noise());
    lag.validate().map_err(invalid)?;
    noise.validate().map_err(invalid)?;

    let jobs: Vec<(usize, Cohort)> = args
        .pace
        .cohorts()
        .iter()
        .flat_map(|c| std::iter::repeat_n(*c, args.runs))
        .enumerate()
        .collect();
    let results = par_map(&jobs, |&(k, cohort)| {
        let seed = args.model.seed.wrapping_add(k as u64);
        let run = simulate_run(&plan, &config, &PaceProfile::for_cohort(cohort), &lag, &noise, seed)
            .map_err(invalid)?;
        let id = format!("{cohort}-{k:03}");
        let truth = run.truth.timeline(&id, cohort.as_str()).map_err(eval_error)?;
        let pred = run
            .session
            .predicted_timeline(&id, cohort.as_str())
            .ok_or_else(|| invalid(format!("run {id} produced no frames")))?;
        Ok::<_, CliError>((truth, pred, run.session.completed))
    });

    let mut truths = Vec::with_capacity(results.len());
    let mut preds = Vec::with_capacity(results.len());
    let mut completed = 0;
    for r in results {
        let (t, p, done) = r?;
        truths.push(t);
        preds.push(p);
        completed += usize::from(done);
    }
    let truth_path = args.out.join("truth.csv");
    let pred_path = args.out.join("pred.csv");
    write_atomic(&truth_path, timelines_to_csv(&truths).as_bytes())?;
    write_atomic(&pred_path, timelines_to_csv(&preds).as_bytes())?;
    Ok(SimulateSummary { runs: truths.len(), completed, truth_path, pred_path })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub completed: bool,
    pub stages_entered: usize,
    pub stage_count: usize,
    pub pred_path: PathBuf,
    pub log_path: PathBuf,
}

/// Replays a scenario file. The predicted timeline is named after the
/// scenario file; an unfinished run keeps its unreached stages empty.
pub fn run(args: &RunArgs) -> Result<RunSummary, CliError> {
    let plan = load_plan(args.plan.as_deref())?;
    let config = engine_config(&args.model)?;
    let text = read_file(&args.scenario)?;
    let events: Vec<ScenarioEvent> =
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", args.scenario.display())))?;
    let session = replay_scenario(&plan, &config, &events, &args.model.lag(), &args.model.noise()).map_err(invalid)?;

    let run_id = args.scenario.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
    let timeline = session
        .predicted_timeline(&run_id, REPLAY_COHORT)
        .ok_or_else(|| invalid("scenario produced no frames"))?;
    let mut log = Vec::new();
    session.write_log(&mut log).map_err(|e| CliError::Io(e.to_string()))?;

    let pred_path = args.out.join("pred.csv");
    let log_path = args.out.join("log.jsonl");
    write_atomic(&pred_path, timelines_to_csv(&[timeline]).as_bytes())?;
    write_atomic(&log_path, &log)?;
    Ok(RunSummary {
        completed: session.completed,
        stages_entered: session.stage_starts.len(),
        stage_count: session.stage_count,
        pred_path,
        log_path,
    })
}

fn load_timelines(path: &Path) -> Result<Vec<Timeline>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    read_timelines(file).map_err(|e| match eval_error(e) {
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
        io => io,
    })
}

pub fn evaluate(args: &EvaluateArgs) -> Result<EfficiencyReport, CliError> {
    if args.hist_bins == 0 {
        return Err(invalid("--hist-bins must be at least 1"));
    }
    let truth = load_timelines(&args.truth)?;
    let pred = load_timelines(&args.pred)?;
    let vectors = pair_runs(&pred, &truth).map_err(eval_error)?;
    let report = aggregate(&vectors, args.hist_bins).map_err(eval_error)?;
    write_atomic(&args.out, report.to_json_pretty().as_bytes())?;
    Ok(report)
}

#[derive(Serialize)]
struct Tables {
    stages: Table,
    histogram: Table,
}

/// Writes `stages.csv` and `histogram.csv`, or `tables.json` holding both.
pub fn report(args: &ReportArgs) -> Result<Vec<PathBuf>, CliError> {
    let text = read_file(&args.report)?;
    let report = EfficiencyReport::from_json(&text).map_err(|e| invalid(format!("{}: {e}", args.report.display())))?;
    report.check().map_err(invalid)?;
    let tables = Tables { stages: report.stage_table(), histogram: report.histogram_table() };
    match args.format {
        Format::Csv => {
            let stages = args.out.join("stages.csv");
            let histogram = args.out.join("histogram.csv");
            write_atomic(&stages, tables.stages.to_csv().as_bytes())?;
            write_atomic(&histogram, tables.histogram.to_csv().as_bytes())?;
            Ok(vec![stages, histogram])
        }
        Format::Json => {
            let path = args.out.join("tables.json");
            let json = serde_json::to_string_pretty(&tables).expect("tables serialize");
            write_atomic(&path, json.as_bytes())?;
            Ok(vec![path])
        }
    }
}

pub fn serve(args: &ServeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
    let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, args.port));
    runtime
        .block_on(stagewatch_service::serve(addr, |bound| {
            let _ = writeln!(out, "listening on http://{bound}");
            let _ = out.flush();
        }))
        .map_err(|e| CliError::Io(format!("{addr}: {e}")))
}
