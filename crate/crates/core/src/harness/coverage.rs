use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;

use super::{mean_std, schema_line, thread_pool, Budget, Experiment, RunConfig};
use crate::agent::{Agent, AgentConfig};
use crate::env::maze::{FACINGS, OBS_SIDE};
use crate::env::pgm::write_pgm;
use crate::env::{Environment, GridMazeEnv, MazeConfig, NoiseMode};
use crate::error::{Error, Result};
use crate::explorer::{build_explorer, ExplorerKind};
use crate::numeric::rng::{stream, streams};

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub step: u64,
    /// Mean intrinsic reward since the previous row.
    pub r_int: f64,
    /// Extrinsic reward collected since the previous row.
    pub r_ext: f64,
    pub epsilon: f64,
    pub coverage_cells: usize,
    pub coverage_posedirs: usize,
}

/// One explorer, noise mode and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MazeCell {
    pub explorer: ExplorerKind,
    pub noise_mode: NoiseMode,
    pub seed: u64,
    pub rows: Vec<CoverageRow>,
    pub state_count: usize,
    pub complete: bool,
    pub wall_ms: u128,
}

impl MazeCell {
    pub fn final_posedirs(&self) -> usize {
        self.rows.last().map_or(0, |r| r.coverage_posedirs)
    }

    pub fn final_cells(&self) -> usize {
        self.rows.last().map_or(0, |r| r.coverage_cells)
    }
}

/// Final coverage of one explorer in one noise mode, over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSummary {
    pub explorer: ExplorerKind,
    pub noise_mode: NoiseMode,
    pub seeds: usize,
    pub posedirs_mean: f64,
    pub posedirs_std: f64,
    pub cells_mean: f64,
    pub cells_std: f64,
    /// `posedirs_mean` over the same explorer's noise-free mean.
    pub ratio_to_none: Option<f64>,
    pub complete: bool,
}

#[derive(Debug, Clone)]
pub struct MazeReport {
    pub cells: Vec<MazeCell>,
    pub summaries: Vec<ModeSummary>,
}

impl MazeReport {
    pub fn summary(&self, explorer: ExplorerKind, mode: NoiseMode) -> Option<&ModeSummary> {
        self.summaries
            .iter()
            .find(|s| s.explorer == explorer && s.noise_mode == mode)
    }

    pub fn complete(&self) -> bool {
        self.cells.iter().all(|c| c.complete)
    }

    pub fn metrics_csv(&self) -> String {
        let mut out = schema_line(Experiment::MazeCoverage);
        out.push_str("explorer,noise_mode,seed,step,r_int,r_ext,epsilon,coverage_cells,coverage_posedirs\n");
        for c in &self.cells {
            for r in &c.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    c.explorer,
                    c.noise_mode,
                    c.seed,
                    r.step,
                    r.r_int,
                    r.r_ext,
                    r.epsilon,
                    r.coverage_cells,
                    r.coverage_posedirs
                );
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = schema_line(Experiment::MazeCoverage);
        out.push_str(
            "explorer,noise_mode,seeds,posedirs_mean,posedirs_std,cells_mean,cells_std,ratio_to_none,complete\n",
        );
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.explorer,
                s.noise_mode,
                s.seeds,
                s.posedirs_mean,
                s.posedirs_std,
                s.cells_mean,
                s.cells_std,
                s.ratio_to_none.map_or("".to_string(), |r| r.to_string()),
                s.complete
            );
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = schema_line(Experiment::MazeCoverage);
        out.push_str("explorer,noise_mode,seed,steps,complete,wall_ms\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.explorer,
                c.noise_mode,
                c.seed,
                c.rows.last().map_or(0, |r| r.step),
                c.complete,
                c.wall_ms
            );
        }
        out
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<10} {:<13} {:>16} {:>14} {:>8}\n",
            "explorer", "noise_mode", "states", "cells", "ratio"
        );
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{:<10} {:<13} {:>8.1} ± {:<5.1} {:>6.1} ± {:<5.1} {:>8}",
                s.explorer.as_str(),
                s.noise_mode.as_str(),
                s.posedirs_mean,
                s.posedirs_std,
                s.cells_mean,
                s.cells_std,
                s.ratio_to_none.map_or("-".to_string(), |r| format!("{r:.3}"))
            );
        }
        out
    }
}

fn run_cell(
    config: &RunConfig,
    kind: ExplorerKind,
    mode: NoiseMode,
    seed: u64,
    budget: Budget,
    frames: bool,
) -> Result<MazeCell> {
    let start = Instant::now();
    let steps = config.effective_steps();
    let mut env = GridMazeEnv::new(MazeConfig {
        noise_mode: mode,
        ..config.maze.clone()
    })?;
    let mut env_seeds = stream(seed, streams::ENV);
    let mut agent_rng = stream(seed, streams::AGENT);
    let agent_config = if kind == ExplorerKind::Random {
        AgentConfig {
            beta: 0.0,
            epsilon_start: 1.0,
            epsilon_end: 1.0,
            ..config.agent.clone()
        }
    } else {
        config.agent.clone()
    };
    let state_count = env.state_count();
    let mut agent = Agent::new(&agent_config, state_count, env.action_count(), steps)?;
    let mut explorer = build_explorer(
        kind,
        env.observation_dim(),
        env.action_count(),
        &config.lpm,
        &config.baseline_config(),
        seed,
    )?;
    let frame_dir = config
        .output_dir
        .join("frames")
        .join(format!("maze_{kind}_{mode}_{seed}"));
    if frames {
        std::fs::create_dir_all(&frame_dir).map_err(|e| Error::io(&frame_dir, e))?;
    }

    let mut seen_states = vec![false; state_count];
    let mut seen_cells = vec![false; state_count / FACINGS];
    let (mut n_states, mut n_cells) = (0, 0);
    let mut visit = |state: usize| {
        if !seen_states[state] {
            seen_states[state] = true;
            n_states += 1;
        }
        let cell = GridMazeEnv::cell_of_state(state);
        if !seen_cells[cell] {
            seen_cells[cell] = true;
            n_cells += 1;
        }
        (n_cells, n_states)
    };

    let mut current = env.reset(env_seeds.random());
    let mut coverage = visit(current.latent_state_id);
    let mut cell = MazeCell {
        explorer: kind,
        noise_mode: mode,
        seed,
        rows: Vec::new(),
        state_count,
        complete: steps == config.total_steps,
        wall_ms: 0,
    };
    let (mut r_int_sum, mut r_ext_sum, mut since) = (0.0, 0.0, 0u64);
    for t in 1..=steps {
        if t % 64 == 0 && budget.expired() {
            cell.complete = false;
            break;
        }
        let s = current.latent_state_id;
        let a = agent.act(s, &mut agent_rng)?;
        let next = env.step(a)?;
        let r_int = explorer.observe(&current.observation, a, &next.observation)?;
        explorer.end_step()?;
        agent.learn(s, a, next.extrinsic_reward, r_int, next.latent_state_id, next.done)?;
        coverage = visit(next.latent_state_id);
        r_int_sum += r_int;
        r_ext_sum += next.extrinsic_reward;
        since += 1;
        if frames && (t as usize) <= config.debug_frames {
            write_pgm(&frame_dir.join(format!("t{t:06}.pgm")), OBS_SIDE, OBS_SIDE, &next.observation)?;
        }
        current = if next.done { env.reset(env_seeds.random()) } else { next };
        if t % config.log_every == 0 || t == steps {
            cell.rows.push(CoverageRow {
                step: t,
                r_int: r_int_sum / since as f64,
                r_ext: r_ext_sum,
                epsilon: agent.epsilon(),
                coverage_cells: coverage.0,
                coverage_posedirs: coverage.1,
            });
            (r_int_sum, r_ext_sum, since) = (0.0, 0.0, 0);
        }
    }
    if since > 0 {
        // cut short by the budget: close the last partial interval
        let t = cell.rows.last().map_or(0, |r| r.step) + since;
        cell.rows.push(CoverageRow {
            step: t,
            r_int: r_int_sum / since as f64,
            r_ext: r_ext_sum,
            epsilon: agent.epsilon(),
            coverage_cells: coverage.0,
            coverage_posedirs: coverage.1,
        });
    }
    cell.wall_ms = start.elapsed().as_millis();
    Ok(cell)
}

/// Runs every explorer (plus the uniform-random floor) in every noise mode
/// for every seed and records cumulative coverage.
pub fn run_maze_coverage(config: &RunConfig) -> Result<MazeReport> {
    config.validate()?;
    let mut kinds = config.explorers.clone();
    if !kinds.contains(&ExplorerKind::Random) {
        kinds.push(ExplorerKind::Random);
    }
    let cells: Vec<(ExplorerKind, NoiseMode, u64)> = kinds
        .iter()
        .flat_map(|&k| {
            config
                .noise_modes
                .iter()
                .flat_map(move |&m| config.seeds.iter().map(move |&s| (k, m, s)))
        })
        .collect();
    let budget = Budget::new(config);
    let first_seed = config.seeds[0];
    let results: Vec<MazeCell> = thread_pool(config)?.install(|| {
        cells
            .par_iter()
            .map(|&(k, m, s)| run_cell(config, k, m, s, budget, config.debug_frames > 0 && s == first_seed))
            .collect::<Result<_>>()
    })?;

    let mut summaries = Vec::new();
    for &k in &kinds {
        let none_mean = config.noise_modes.contains(&NoiseMode::None).then(|| {
            let v: Vec<f64> = results
                .iter()
                .filter(|c| c.explorer == k && c.noise_mode == NoiseMode::None)
                .map(|c| c.final_posedirs() as f64)
                .collect();
            mean_std(&v).0
        });
        for &m in &config.noise_modes {
            let group: Vec<&MazeCell> = results
                .iter()
                .filter(|c| c.explorer == k && c.noise_mode == m)
                .collect();
            let states: Vec<f64> = group.iter().map(|c| c.final_posedirs() as f64).collect();
            let cells: Vec<f64> = group.iter().map(|c| c.final_cells() as f64).collect();
            let (pm, ps) = mean_std(&states);
            let (cm, cs) = mean_std(&cells);
            summaries.push(ModeSummary {
                explorer: k,
                noise_mode: m,
                seeds: group.len(),
                posedirs_mean: pm,
                posedirs_std: ps,
                cells_mean: cm,
                cells_std: cs,
                ratio_to_none: none_mean.filter(|n| *n > 0.0).map(|n| pm / n),
                complete: group.iter().all(|c| c.complete),
            });
        }
    }
    Ok(MazeReport {
        cells: results,
        summaries,
    })
}
