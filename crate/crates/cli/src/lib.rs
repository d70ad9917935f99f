//! `stagewatch` command line: simulate cohorts, replay scenario files,
//! score predicted timelines against labels and tabulate the results.

mod commands;
mod output;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stagewatch_core::sim::{Cohort, LagModel, NoiseModel};
use thiserror::Error;

pub use commands::{
    evaluate, load_plan, report, run, serve, simulate, RunSummary, SimulateSummary, REPLAY_COHORT,
};
pub use output::write_atomic;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: invalid plan, malformed file, inconsistent runs.
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "stagewatch", version, about = "Assembly stage supervision: simulate, replay, evaluate, report, serve")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate fast and/or slow cohorts; writes truth.csv and pred.csv.
    Simulate(SimulateArgs),
    /// Replay a scenario file through the engine; writes pred.csv and log.jsonl.
    Run(RunArgs),
    /// Score predicted timelines against labels; writes a report JSON.
    Evaluate(EvaluateArgs),
    /// Turn a report into per-stage and histogram tables.
    Report(ReportArgs),
    /// Serve live sessions over HTTP on localhost.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PaceArg {
    Fast,
    Slow,
    Both,
}

impl PaceArg {
    pub fn cohorts(self) -> &'static [Cohort] {
        match self {
            PaceArg::Fast => &[Cohort::Fast],
            PaceArg::Slow => &[Cohort::Slow],
            PaceArg::Both => &[Cohort::Fast, Cohort::Slow],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Camera model and timing flags shared by `simulate` and `run`.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Camera lag in ms (center of the jitter range when --lag-jitter > 0).
    #[arg(long, default_value_t = 0)]
    pub lag_ms: u64,
    /// Half-width in ms of a uniform per-frame lag range around --lag-ms.
    #[arg(long, default_value_t = 0)]
    pub lag_jitter: u64,
    /// Probability of dropping each detection or hypothesis, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub miss_rate: f64,
    /// Per-frame probability of a spurious connection hypothesis, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub fp_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Camera frame rate; the frame period is 1000 / fps ms, rounded.
    #[arg(long, default_value_t = 10.0)]
    pub fps: f64,
}

impl Default for ModelArgs {
    fn default() -> Self {
        ModelArgs { lag_ms: 0, lag_jitter: 0, miss_rate: 0.0, fp_rate: 0.0, seed: 0, fps: 10.0 }
    }
}

impl ModelArgs {
    pub fn lag(&self) -> LagModel {
        if self.lag_jitter == 0 {
            LagModel::Constant { lag_ms: self.lag_ms }
        } else {
            LagModel::UniformJitter {
                min_ms: self.lag_ms.saturating_sub(self.lag_jitter),
                max_ms: self.lag_ms + self.lag_jitter,
            }
        }
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel { miss_rate: self.miss_rate, false_hypothesis_rate: self.fp_rate, seed: self.seed }
    }

    pub fn frame_period_ms(&self) -> Result<u64, CliError> {
        if !(self.fps.is_finite() && self.fps > 0.0 && self.fps <= 1000.0) {
            return Err(CliError::Validation(format!("--fps must be in (0, 1000], got {}", self.fps)));
        }
        Ok((1000.0 / self.fps).round() as u64)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Plan JSON; the built-in reference plan when omitted.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Runs per cohort.
    #[arg(long, default_value_t = 30)]
    pub runs: usize,
    #[arg(long, value_enum, default_value_t = PaceArg::Both)]
    pub pace: PaceArg,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// JSON array of timed bench actions.
    #[arg(long)]
    pub scenario: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Labeled timelines.
    #[arg(long)]
    pub truth: PathBuf,
    /// Predicted timelines.
    #[arg(long)]
    pub pred: PathBuf,
    /// Report JSON path.
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
    #[arg(long, default_value_t = stagewatch_core::eval::DEFAULT_HIST_BINS)]
    pub hist_bins: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}

/// Runs one parsed command, writing progress lines to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let line = match cli.command {
        Command::Simulate(args) => {
            let s = simulate(&args)?;
            format!(
                "simulated {} runs ({} completed) -> {}, {}",
                s.runs,
                s.completed,
                s.truth_path.display(),
                s.pred_path.display()
            )
        }
        Command::Run(args) => {
            let s = run(&args)?;
            format!(
                "completed={} stages_entered={}/{} -> {}, {}",
                s.completed,
                s.stages_entered,
                s.stage_count,
                s.pred_path.display(),
                s.log_path.display()
            )
        }
        Command::Evaluate(args) => {
            let r = evaluate(&args)?;
            format!(
                "evaluated {} runs, mean IoU {:.4} (std {:.4}) -> {}",
                r.runs,
                r.overall.mean,
                r.overall.std,
                args.out.display()
            )
        }
        Command::Report(args) => {
            let paths = report(&args)?;
            let names: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
            format!("wrote {}", names.join(", "))
        }
        Command::Serve(args) => {
            serve(&args, out)?;
            return Ok(());
        }
    };
    writeln!(out, "{line}").map_err(|e| CliError::Io(e.to_string()))
}
