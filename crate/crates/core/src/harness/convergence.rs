use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;

use super::{schema_line, thread_pool, Budget, Experiment, RunConfig};
use crate::env::pgm::write_pgm;
use crate::env::{load_idx, synthetic_digit_bank, Branch, DigitBank, Environment, PairedTransitionEnv, DIGIT_SIDE};
use crate::error::{Error, Result};
use crate::explorer::{build_explorer, ExplorerKind};
use crate::numeric::rng::{stream, streams};

/// Intrinsic-reward traces of one explorer and seed, one entry per step.
#[derive(Debug, Clone, PartialEq)]
pub struct MnistRun {
    pub explorer: ExplorerKind,
    pub seed: u64,
    pub deterministic: Vec<f64>,
    pub stochastic: Vec<f64>,
    pub complete: bool,
    pub wall_ms: u128,
}

impl MnistRun {
    pub fn trace(&self, branch: Branch) -> &[f64] {
        match branch {
            Branch::Deterministic => &self.deterministic,
            Branch::Stochastic => &self.stochastic,
        }
    }
}

/// Convergence of one branch trace, averaged over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSummary {
    pub explorer: ExplorerKind,
    pub branch: Branch,
    pub seeds: usize,
    /// Crossing step of the seed-averaged trace.
    pub crossing: Option<u64>,
    pub seed_crossings: Vec<Option<u64>>,
    /// Windowed metric at the last step.
    pub final_metric: f64,
}

#[derive(Debug, Clone)]
pub struct MnistReport {
    pub window: usize,
    pub threshold: f64,
    pub runs: Vec<MnistRun>,
    pub summaries: Vec<BranchSummary>,
}

/// Mean of `|x|` over the trailing `window` entries (fewer at the start).
pub fn windowed_abs_mean(trace: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(trace.len());
    let mut sum = 0.0;
    for (i, x) in trace.iter().enumerate() {
        sum += x.abs();
        if i >= window {
            sum -= trace[i - window].abs();
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// First 1-based step from which the metric stays below `threshold`;
/// `None` when the final value is not below it.
pub fn crossing_step(metric: &[f64], threshold: f64) -> Option<u64> {
    match metric.iter().rposition(|m| !(*m < threshold)) {
        None if metric.is_empty() => None,
        None => Some(1),
        Some(last) if last + 1 == metric.len() => None,
        Some(last) => Some(last as u64 + 2),
    }
}

fn seed_average(traces: &[&[f64]]) -> Vec<f64> {
    let len = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    (0..len)
        .map(|i| traces.iter().map(|t| t[i]).sum::<f64>() / traces.len() as f64)
        .collect()
}

impl MnistReport {
    pub fn summary(&self, explorer: ExplorerKind, branch: Branch) -> Option<&BranchSummary> {
        self.summaries
            .iter()
            .find(|s| s.explorer == explorer && s.branch == branch)
    }

    pub fn complete(&self) -> bool {
        self.runs.iter().all(|r| r.complete)
    }

    /// Seed-averaged trace of one explorer and branch.
    pub fn mean_trace(&self, explorer: ExplorerKind, branch: Branch) -> Vec<f64> {
        let traces: Vec<&[f64]> = self
            .runs
            .iter()
            .filter(|r| r.explorer == explorer)
            .map(|r| r.trace(branch))
            .collect();
        seed_average(&traces)
    }

    pub fn metrics_csv(&self) -> String {
        let mut out = schema_line(Experiment::MnistConvergence);
        out.push_str("explorer,seed,step,branch,r_int,r_ext\n");
        for run in &self.runs {
            for (i, (d, s)) in run.deterministic.iter().zip(&run.stochastic).enumerate() {
                let step = i + 1;
                let _ = writeln!(out, "{},{},{step},deterministic,{d},0", run.explorer, run.seed);
                let _ = writeln!(out, "{},{},{step},stochastic,{s},0", run.explorer, run.seed);
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = schema_line(Experiment::MnistConvergence);
        out.push_str(
            "explorer,branch,seeds,window,threshold,crossing_step,seed_crossing_mean,seed_crossing_std,seeds_converged,final_metric\n",
        );
        for s in &self.summaries {
            let converged: Vec<f64> = s.seed_crossings.iter().flatten().map(|&c| c as f64).collect();
            let (m, sd) = super::mean_std(&converged);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                s.explorer,
                s.branch.as_str(),
                s.seeds,
                self.window,
                self.threshold,
                s.crossing.map_or("none".to_string(), |c| c.to_string()),
                m,
                sd,
                converged.len(),
                s.final_metric
            );
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = schema_line(Experiment::MnistConvergence);
        out.push_str("explorer,seed,steps,complete,wall_ms\n");
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.explorer,
                r.seed,
                r.deterministic.len(),
                r.complete,
                r.wall_ms
            );
        }
        out
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<10} {:<14} {:>10} {:>14}\n",
            "explorer", "branch", "crossing", "final_metric"
        );
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{:<10} {:<14} {:>10} {:>14.5}",
                s.explorer.as_str(),
                s.branch.as_str(),
                s.crossing.map_or("none".to_string(), |c| c.to_string()),
                s.final_metric
            );
        }
        out
    }
}

pub(crate) fn load_bank(config: &RunConfig) -> Result<DigitBank> {
    let d = &config.digits;
    match (&d.images, &d.labels) {
        (Some(images), Some(labels)) => load_idx(images, labels),
        (None, None) if d.allow_synthetic => Ok(synthetic_digit_bank(d.synthetic_seed)),
        (None, None) => Err(Error::InvalidConfig(
            "no digit dataset configured and synthetic digits disabled".into(),
        )),
        _ => Err(Error::InvalidConfig("digits.images and digits.labels go together".into())),
    }
}

fn run_cell(
    config: &RunConfig,
    bank: &Arc<DigitBank>,
    kind: ExplorerKind,
    seed: u64,
    budget: Budget,
    frames: bool,
) -> Result<MnistRun> {
    let start = Instant::now();
    let steps = config.effective_steps();
    let mut env = PairedTransitionEnv::new(Arc::clone(bank), 0);
    env.reset(stream(seed, streams::ENV).random());
    let mut explorer = build_explorer(
        kind,
        env.observation_dim(),
        env.action_count(),
        &config.lpm,
        &config.baseline_config(),
        seed,
    )?;
    let mut run = MnistRun {
        explorer: kind,
        seed,
        deterministic: Vec::with_capacity(steps as usize),
        stochastic: Vec::with_capacity(steps as usize),
        complete: steps == config.total_steps,
        wall_ms: 0,
    };
    let frame_dir = config.output_dir.join("frames").join(format!("mnist_{kind}_{seed}"));
    if frames {
        std::fs::create_dir_all(&frame_dir).map_err(|e| Error::io(&frame_dir, e))?;
    }
    for t in 1..=steps {
        if budget.expired() {
            run.complete = false;
            break;
        }
        for branch in Branch::ALL {
            let obs = env.anchor(branch).clone();
            let next = env.step(branch.action())?;
            let r = explorer.observe(&obs, branch.action(), &next.observation)?;
            match branch {
                Branch::Deterministic => run.deterministic.push(r),
                Branch::Stochastic => run.stochastic.push(r),
            }
            if frames && (t as usize) <= config.debug_frames {
                let path = frame_dir.join(format!("t{t:06}_{}.pgm", branch.as_str()));
                write_pgm(&path, DIGIT_SIDE, DIGIT_SIDE, &next.observation)?;
            }
        }
        explorer.end_step()?;
    }
    run.wall_ms = start.elapsed().as_millis();
    Ok(run)
}

/// Scores one deterministic and one stochastic transition per step with a
/// shared model schedule, for every configured explorer and seed.
pub fn run_mnist_convergence(config: &RunConfig) -> Result<MnistReport> {
    config.validate()?;
    let bank = Arc::new(load_bank(config)?);
    let budget = Budget::new(config);
    let cells: Vec<(ExplorerKind, u64)> = config
        .explorers
        .iter()
        .flat_map(|&k| config.seeds.iter().map(move |&s| (k, s)))
        .collect();
    let first_seed = config.seeds[0];
    let runs: Vec<MnistRun> = thread_pool(config)?.install(|| {
        cells
            .par_iter()
            .map(|&(k, s)| run_cell(config, &bank, k, s, budget, config.debug_frames > 0 && s == first_seed))
            .collect::<Result<_>>()
    })?;

    let mut report = MnistReport {
        window: config.convergence.window,
        threshold: config.convergence.threshold,
        runs,
        summaries: Vec::new(),
    };
    for &kind in &config.explorers {
        for branch in Branch::ALL {
            let mean = report.mean_trace(kind, branch);
            let metric = windowed_abs_mean(&mean, report.window);
            let seed_crossings = report
                .runs
                .iter()
                .filter(|r| r.explorer == kind)
                .map(|r| crossing_step(&windowed_abs_mean(r.trace(branch), report.window), report.threshold))
                .collect::<Vec<_>>();
            report.summaries.push(BranchSummary {
                explorer: kind,
                branch,
                seeds: seed_crossings.len(),
                crossing: crossing_step(&metric, report.threshold),
                seed_crossings,
                final_metric: metric.last().copied().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(report)
}
