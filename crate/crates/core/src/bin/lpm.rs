use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lpm_explore::env::NoiseMode;
use lpm_explore::explorer::ExplorerKind;
use lpm_explore::harness::{run_experiment, Experiment, RunConfig};

#[derive(Parser)]
#[command(name = "lpm", version, about = "Learning-progress exploration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSVs to the output directory.
    Run {
        /// mnist_convergence, maze_coverage or theorem_verify.
        experiment: Experiment,
        /// TOML file; dotted keys override the experiment defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        seed_list: Option<Vec<u64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        explorer: Option<Vec<ExplorerKind>>,
        #[arg(long, value_delimiter = ',')]
        noise_mode: Option<Vec<NoiseMode>>,
        #[arg(long)]
        steps: Option<u64>,
        /// Per-cell cap on environment steps.
        #[arg(long)]
        step_budget: Option<u64>,
        /// Stop all cells after this many seconds, keeping partial results.
        #[arg(long)]
        wall_clock_budget: Option<f64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Dump this many observations per cell as PGM under `frames/`.
        #[arg(long, num_args = 0..=1, default_missing_value = "200")]
        debug_frames: Option<usize>,
        /// Extra `key=value` overrides, applied last.
        #[arg(long = "set")]
        overrides: Vec<String>,
    },
    /// Print the default configuration of an experiment.
    Config { experiment: Experiment },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> lpm_explore::Result<ExitCode> {
    match cli.command {
        Command::Config { experiment } => {
            print!("{}", RunConfig::for_experiment(experiment).to_toml_string()?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            experiment,
            config,
            seed_list,
            out,
            explorer,
            noise_mode,
            steps,
            step_budget,
            wall_clock_budget,
            threads,
            debug_frames,
            overrides,
        } => {
            let mut cfg = match config {
                Some(path) => RunConfig::load(&path, Some(experiment))?,
                None => RunConfig::for_experiment(experiment),
            };
            if let Some(s) = seed_list {
                cfg.seeds = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if let Some(e) = explorer {
                cfg.explorers = e;
            }
            if let Some(m) = noise_mode {
                cfg.noise_modes = m;
            }
            if let Some(s) = steps {
                cfg.total_steps = s;
            }
            cfg.step_budget = step_budget.or(cfg.step_budget);
            cfg.wall_clock_budget_secs = wall_clock_budget.or(cfg.wall_clock_budget_secs);
            cfg.threads = threads.or(cfg.threads);
            if let Some(n) = debug_frames {
                cfg.debug_frames = n;
            }
            for o in &overrides {
                cfg.set(o)?;
            }
            cfg.validate()?;
            let outcome = run_experiment(&cfg)?;
            print!("{}", outcome.report);
            println!("outputs: {}", outcome.output_dir.display());
            if !outcome.complete {
                println!("partial results: a budget stopped the run early");
            }
            Ok(if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
