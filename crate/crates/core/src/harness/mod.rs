//! Experiment runner: paired-transition convergence, maze coverage under
//! noise, and the information-gain theorem suite.
//!
//! Every experiment splits into independent cells (explorer × noise mode ×
//! seed). Cells own their environment, explorer, agent and random streams,
//! run in parallel, and are merged in a fixed order so that the CSV bodies
//! depend only on the configuration. Wall-clock timings go to `timing.csv`.

mod config;
mod coverage;
mod convergence;
mod theorem;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

pub use config::{
    BaselineSection, ConvergenceConfig, DigitsConfig, Experiment, RunConfig, TheoremSection,
};
pub use convergence::{
    crossing_step, run_mnist_convergence, windowed_abs_mean, BranchSummary, MnistReport, MnistRun,
};
pub use coverage::{run_maze_coverage, CoverageRow, MazeCell, MazeReport, ModeSummary};
pub use theorem::{run_theorem_verify, TheoremReport};

use crate::error::{Error, Result};

/// Header comment naming the column set of a metrics file.
pub fn schema_line(experiment: Experiment) -> String {
    format!("# schema: lpm-explore/{}/v1\n", experiment.as_str())
}

/// Shared stop condition for all cells of one run.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    deadline: Option<Instant>,
}

impl Budget {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            deadline: config
                .wall_clock_budget_secs
                .map(|s| Instant::now() + Duration::from_secs_f64(s)),
        }
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

fn thread_pool(config: &RunConfig) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

/// What `run_experiment` wrote and whether it succeeded.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    /// False when any check failed (theorem suite only).
    pub passed: bool,
    /// False when a budget cut some cell short.
    pub complete: bool,
    /// Human-readable summary.
    pub report: String,
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Error::io(&path, e))
}

/// Runs the configured experiment and writes its files under `output_dir`.
pub fn run_experiment(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let dir = config.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write(&dir, "config.toml", &config.to_toml_string()?)?;
    let outcome = match config.experiment {
        Experiment::MnistConvergence => {
            let r = run_mnist_convergence(config)?;
            write(&dir, "metrics.csv", &r.metrics_csv())?;
            write(&dir, "summary.csv", &r.summary_csv())?;
            write(&dir, "timing.csv", &r.timing_csv())?;
            RunOutcome {
                experiment: config.experiment,
                output_dir: dir.clone(),
                passed: true,
                complete: r.complete(),
                report: r.table(),
            }
        }
        Experiment::MazeCoverage => {
            let r = run_maze_coverage(config)?;
            write(&dir, "metrics.csv", &r.metrics_csv())?;
            write(&dir, "summary.csv", &r.summary_csv())?;
            write(&dir, "timing.csv", &r.timing_csv())?;
            RunOutcome {
                experiment: config.experiment,
                output_dir: dir.clone(),
                passed: true,
                complete: r.complete(),
                report: r.table(),
            }
        }
        Experiment::TheoremVerify => {
            let r = run_theorem_verify(config)?;
            write(&dir, "summary.csv", &r.summary_csv())?;
            write(&dir, "timing.csv", &r.timing_csv())?;
            write(&dir, "report.txt", &r.table())?;
            if !r.passed() {
                write(&dir, "counterexamples.json", &r.counterexamples_json())?;
            }
            RunOutcome {
                experiment: config.experiment,
                output_dir: dir.clone(),
                passed: r.passed(),
                complete: true,
                report: r.table(),
            }
        }
    };
    if !outcome.complete {
        log::warn!("budget exhausted: results in {} are partial", dir.display());
    }
    Ok(outcome)
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
