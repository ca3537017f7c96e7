use std::fs;
use std::path::Path;

use lpm_explore::env::NoiseMode;
use lpm_explore::explorer::ExplorerKind;
use lpm_explore::harness::{run_experiment, run_maze_coverage, run_mnist_convergence, Experiment, RunConfig};

fn quick_mnist(out: &Path) -> RunConfig {
    let mut c = RunConfig::for_experiment(Experiment::MnistConvergence);
    c.seeds = vec![0, 1];
    c.total_steps = 60;
    c.output_dir = out.to_path_buf();
    c.lpm.queue_size = 10;
    c.lpm.dynamics_hidden = vec![16];
    c.lpm.error_hidden = vec![8];
    c
}

fn quick_maze(out: &Path) -> RunConfig {
    let mut c = RunConfig::for_experiment(Experiment::MazeCoverage);
    c.seeds = vec![0, 1];
    c.total_steps = 1500;
    c.log_every = 100;
    c.output_dir = out.to_path_buf();
    c.maze.room_width = 4;
    c.maze.room_height = 4;
    c.lpm.queue_size = 20;
    c.lpm.dynamics_hidden = vec![16];
    c.lpm.error_hidden = vec![8];
    c
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn same_config_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, make) in [
        ("mnist", quick_mnist as fn(&Path) -> RunConfig),
        ("maze", quick_maze as fn(&Path) -> RunConfig),
    ] {
        let a = tmp.path().join(format!("{name}_a"));
        let b = tmp.path().join(format!("{name}_b"));
        let mut ca = make(&a);
        ca.threads = Some(1);
        let mut cb = make(&b);
        cb.threads = Some(2);
        run_experiment(&ca).unwrap();
        run_experiment(&cb).unwrap();
        for file in ["metrics.csv", "summary.csv"] {
            assert_eq!(read(&a, file), read(&b, file), "{name}/{file}");
        }
        let timing = read(&a, "timing.csv");
        assert!(timing.lines().nth(1).unwrap().ends_with("wall_ms"));
    }
    let mut t = RunConfig::for_experiment(Experiment::TheoremVerify);
    t.theorem.instance_count = 100;
    t.output_dir = tmp.path().join("thm_a");
    run_experiment(&t).unwrap();
    t.output_dir = tmp.path().join("thm_b");
    run_experiment(&t).unwrap();
    assert_eq!(read(&tmp.path().join("thm_a"), "summary.csv"), read(&tmp.path().join("thm_b"), "summary.csv"));
}

#[test]
fn csv_files_carry_a_schema_line() {
    let tmp = tempfile::tempdir().unwrap();
    let c = quick_mnist(tmp.path());
    run_experiment(&c).unwrap();
    for file in ["metrics.csv", "summary.csv", "timing.csv"] {
        assert_eq!(read(tmp.path(), file).lines().next().unwrap(), "# schema: lpm-explore/mnist_convergence/v1");
    }
    let saved = RunConfig::load(&tmp.path().join("config.toml"), None).unwrap();
    assert_eq!(saved, c);
}

#[test]
fn mnist_scoring_has_no_extrinsic_reward() {
    let tmp = tempfile::tempdir().unwrap();
    let c = quick_mnist(tmp.path());
    let report = run_mnist_convergence(&c).unwrap();
    assert_eq!(report.runs.len(), c.explorers.len() * c.seeds.len());
    for run in &report.runs {
        assert_eq!(run.deterministic.len(), 60);
        assert_eq!(run.stochastic.len(), 60);
    }
    let rows = data_rows(&report.metrics_csv());
    assert_eq!(rows.len(), report.runs.len() * 60 * 2);
    assert!(rows.iter().all(|r| r[5] == "0"));
}

#[test]
fn mnist_without_data_or_synthetic_fallback_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = quick_mnist(tmp.path());
    c.digits.allow_synthetic = false;
    assert!(run_mnist_convergence(&c).is_err());
    c.digits.images = Some(tmp.path().join("missing-images"));
    c.digits.labels = Some(tmp.path().join("missing-labels"));
    assert!(run_mnist_convergence(&c).is_err());
}

#[test]
fn coverage_curves_are_monotone_and_bounded() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = quick_maze(tmp.path());
    c.noise_modes = vec![NoiseMode::None];
    c.seeds = vec![3];
    let report = run_maze_coverage(&c).unwrap();
    let kinds: Vec<ExplorerKind> = report.cells.iter().map(|cell| cell.explorer).collect();
    assert!(kinds.contains(&ExplorerKind::Random), "random floor missing: {kinds:?}");
    for cell in &report.cells {
        assert_eq!(cell.rows.last().unwrap().step, 1500);
        for pair in cell.rows.windows(2) {
            assert!(pair[0].step < pair[1].step);
            assert!(pair[0].coverage_posedirs <= pair[1].coverage_posedirs);
            assert!(pair[0].coverage_cells <= pair[1].coverage_cells);
        }
        assert!(cell.final_posedirs() <= cell.state_count);
        assert!(cell.final_cells() * 4 <= cell.state_count);
        assert!(cell.rows.iter().all(|r| r.r_ext == 0.0));
    }
    let random = report.summary(ExplorerKind::Random, NoiseMode::None).unwrap();
    assert!(random.posedirs_mean > 0.0);
}

#[test]
fn step_budget_marks_partial_results() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = quick_maze(tmp.path());
    c.noise_modes = vec![NoiseMode::None];
    c.step_budget = Some(250);
    let outcome = run_experiment(&c).unwrap();
    assert!(!outcome.complete);
    let report = run_maze_coverage(&c).unwrap();
    assert!(report.cells.iter().all(|cell| !cell.complete && cell.rows.last().unwrap().step == 250));
    assert!(read(tmp.path(), "summary.csv").contains(",false"));
}

#[test]
fn wall_clock_budget_stops_early() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = quick_maze(tmp.path());
    c.total_steps = 5_000_000;
    c.wall_clock_budget_secs = Some(0.5);
    let started = std::time::Instant::now();
    let outcome = run_experiment(&c).unwrap();
    assert!(!outcome.complete);
    assert!(started.elapsed().as_secs() < 30);
}

#[test]
fn invalid_configs_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = quick_maze(tmp.path());
    c.seeds.clear();
    assert!(run_experiment(&c).is_err());
    let mut c = quick_maze(tmp.path());
    c.total_steps = 0;
    assert!(run_experiment(&c).is_err());
    let mut c = quick_maze(tmp.path());
    c.noise_modes.clear();
    assert!(run_experiment(&c).is_err());
    let mut c = RunConfig::for_experiment(Experiment::TheoremVerify);
    c.theorem.instance_count = 0;
    assert!(run_experiment(&c).is_err());
    assert!(RunConfig::from_toml("seeds = [1]\nlpm.queue_size = 0\n", Some(Experiment::MnistConvergence))
        .and_then(|c| c.validate())
        .is_err());
}

#[test]
fn flipped_theorem_check_writes_counterexamples() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = RunConfig::from_toml(
        "theorem.instance_count = 200\ntheorem.fault = \"flip_monotone_sign\"\n",
        Some(Experiment::TheoremVerify),
    )
    .unwrap();
    c.output_dir = tmp.path().to_path_buf();
    let outcome = run_experiment(&c).unwrap();
    assert!(!outcome.passed);
    let json: serde_json::Value = serde_json::from_str(&read(tmp.path(), "counterexamples.json")).unwrap();
    assert!(json.to_string().contains("t1_1_monotone_bound"));
}
