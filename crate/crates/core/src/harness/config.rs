use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::baselines::BaselineConfig;
use crate::env::{MazeConfig, NoiseMode};
use crate::error::{Error, Result};
use crate::explorer::ExplorerKind;
use crate::lpm::LpmConfig;
use crate::oracle::Fault;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    MnistConvergence,
    MazeCoverage,
    TheoremVerify,
}

impl Experiment {
    pub const ALL: [Experiment; 3] = [
        Experiment::MnistConvergence,
        Experiment::MazeCoverage,
        Experiment::TheoremVerify,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::MnistConvergence => "mnist_convergence",
            Experiment::MazeCoverage => "maze_coverage",
            Experiment::TheoremVerify => "theorem_verify",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown experiment `{s}`")))
    }
}

/// Windowed convergence test applied to intrinsic-reward traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub window: usize,
    pub threshold: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            window: 20,
            threshold: 0.05,
        }
    }
}

/// Baseline-only settings; the training budget is copied from `lpm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub ensemble_size: usize,
    pub rnd_embedding_dim: usize,
    pub rnd_hidden: Vec<usize>,
    pub ama_lambda: f64,
}

impl Default for BaselineSection {
    fn default() -> Self {
        let b = BaselineConfig::default();
        Self {
            ensemble_size: b.ensemble_size,
            rnd_embedding_dim: b.rnd_embedding_dim,
            rnd_hidden: b.rnd_hidden,
            ama_lambda: b.ama_lambda,
        }
    }
}

/// Where the paired-transition digits come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DigitsConfig {
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Fall back to the built-in synthetic bank when no IDX files are given.
    pub allow_synthetic: bool,
    pub synthetic_seed: u64,
}

impl Default for DigitsConfig {
    fn default() -> Self {
        Self {
            images: None,
            labels: None,
            allow_synthetic: true,
            synthetic_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoremSection {
    pub instance_count: usize,
    #[doc(hidden)]
    pub fault: Option<Fault>,
}

impl Default for TheoremSection {
    fn default() -> Self {
        Self {
            instance_count: 1000,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub explorers: Vec<ExplorerKind>,
    pub noise_modes: Vec<NoiseMode>,
    pub seeds: Vec<u64>,
    pub total_steps: u64,
    /// Maze rows are written every `log_every` steps and at the last step.
    pub log_every: u64,
    pub output_dir: PathBuf,
    /// Per-cell cap on environment steps.
    pub step_budget: Option<u64>,
    pub wall_clock_budget_secs: Option<f64>,
    /// Worker threads for independent cells; unset uses every core.
    pub threads: Option<usize>,
    /// Observations to dump as PGM per cell (first steps of the first seed).
    pub debug_frames: usize,
    pub convergence: ConvergenceConfig,
    pub lpm: LpmConfig,
    pub baseline: BaselineSection,
    pub agent: AgentConfig,
    pub maze: MazeConfig,
    pub digits: DigitsConfig,
    pub theorem: TheoremSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::for_experiment(Experiment::MnistConvergence)
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl RunConfig {
    /// Desk-scale defaults for one experiment.
    pub fn for_experiment(experiment: Experiment) -> Self {
        let mut c = Self {
            experiment,
            explorers: vec![ExplorerKind::Lpm],
            noise_modes: NoiseMode::ALL.to_vec(),
            seeds: vec![0],
            total_steps: 1,
            log_every: 1,
            output_dir: PathBuf::from("runs").join(experiment.as_str()),
            step_budget: None,
            wall_clock_budget_secs: None,
            threads: None,
            debug_frames: 0,
            convergence: ConvergenceConfig::default(),
            lpm: LpmConfig::default(),
            baseline: BaselineSection::default(),
            agent: AgentConfig::default(),
            maze: MazeConfig::default(),
            digits: DigitsConfig::default(),
            theorem: TheoremSection::default(),
        };
        match experiment {
            Experiment::MnistConvergence => {
                c.explorers = vec![ExplorerKind::Lpm, ExplorerKind::Pe, ExplorerKind::Ama];
                c.noise_modes = vec![NoiseMode::None];
                c.seeds = (0..5).collect();
                c.total_steps = 600;
            }
            Experiment::MazeCoverage => {
                c.explorers = vec![ExplorerKind::Lpm, ExplorerKind::Pe];
                c.seeds = (0..10).collect();
                c.total_steps = 30_000;
                c.log_every = 100;
                c.lpm.update_cycle = 64;
            }
            Experiment::TheoremVerify => {}
        }
        c
    }

    /// Experiment defaults overlaid with a TOML document. Dotted keys
    /// (`lpm.queue_size = 50`) and tables are equivalent. The experiment is
    /// taken from `experiment` when given, else from the document.
    pub fn from_toml(text: &str, experiment: Option<Experiment>) -> Result<Self> {
        let doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))?;
        let named = match doc.get("experiment") {
            Some(toml::Value::String(s)) => Some(s.parse::<Experiment>()?),
            Some(_) => return Err(Error::InvalidConfig("experiment must be a string".into())),
            None => None,
        };
        let experiment = experiment
            .or(named)
            .ok_or_else(|| Error::InvalidConfig("no experiment given".into()))?;
        let mut base = Self::for_experiment(experiment).to_table()?;
        merge(&mut base, doc);
        base.insert("experiment".into(), toml::Value::String(experiment.as_str().into()));
        let config: Self = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, experiment: Option<Experiment>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, experiment)
    }

    /// Applies one `key = value` override in TOML syntax, e.g.
    /// `lpm.update_cycle=8` or `seeds=[1,2]`. Bare words are read as strings.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("override `{assignment}` lacks `=`")))?;
        let (key, value) = (key.trim(), value.trim());
        let line = format!("{key} = {value}");
        let doc: toml::Table = match line.parse() {
            Ok(d) => d,
            Err(_) => format!("{key} = {}", toml::Value::String(value.into()))
                .parse()
                .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))?,
        };
        let mut base = self.to_table()?;
        merge(&mut base, doc);
        let updated: Self = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))?;
        *self = updated;
        Ok(())
    }

    fn to_table(&self) -> Result<toml::Table> {
        toml::Table::try_from(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        if let Some(b) = self.wall_clock_budget_secs {
            if !(b > 0.0) {
                return bad("wall_clock_budget_secs must be positive".into());
            }
        }
        match self.experiment {
            Experiment::TheoremVerify => {
                if self.theorem.instance_count == 0 {
                    return bad("theorem.instance_count must be at least 1".into());
                }
            }
            Experiment::MnistConvergence | Experiment::MazeCoverage => {
                if self.total_steps == 0 || self.log_every == 0 {
                    return bad("total_steps and log_every must be positive".into());
                }
                if self.explorers.is_empty() {
                    return bad("at least one explorer is required".into());
                }
                if self.convergence.window == 0 || !(self.convergence.threshold > 0.0) {
                    return bad("convergence window and threshold must be positive".into());
                }
                if self.experiment == Experiment::MazeCoverage && self.noise_modes.is_empty() {
                    return bad("at least one noise mode is required".into());
                }
                self.lpm.validate()?;
                self.baseline_config().validate()?;
                self.agent.validate()?;
            }
        }
        Ok(())
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        BaselineConfig {
            ensemble_size: self.baseline.ensemble_size,
            rnd_embedding_dim: self.baseline.rnd_embedding_dim,
            rnd_hidden: self.baseline.rnd_hidden.clone(),
            ama_lambda: self.baseline.ama_lambda,
            ..BaselineConfig::matching(&self.lpm)
        }
    }

    /// Steps each cell actually runs.
    pub fn effective_steps(&self) -> u64 {
        self.step_budget.map_or(self.total_steps, |b| b.min(self.total_steps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_keys_and_tables_agree() {
        let a = RunConfig::from_toml("experiment = \"maze_coverage\"\nlpm.queue_size = 7\n", None).unwrap();
        let b = RunConfig::from_toml("[lpm]\nqueue_size = 7\n", Some(Experiment::MazeCoverage)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.lpm.queue_size, 7);
        assert_eq!(a.lpm.update_cycle, 64);
        assert_eq!(a.total_steps, 30_000);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(RunConfig::from_toml("lpm.queue = 7", Some(Experiment::MazeCoverage)).is_err());
        assert!(RunConfig::from_toml("seeds = []", Some(Experiment::MazeCoverage)).is_err());
        assert!(RunConfig::from_toml("theorem.instance_count = 0", Some(Experiment::TheoremVerify)).is_err());
        assert!(RunConfig::from_toml("", None).is_err());
    }

    #[test]
    fn overrides_win() {
        let mut c = RunConfig::for_experiment(Experiment::MnistConvergence);
        c.set("lpm.learning_rate = 0.01").unwrap();
        c.set("explorers=[\"rnd\"]").unwrap();
        c.set("output_dir=out/x").unwrap();
        assert_eq!(c.lpm.learning_rate, 0.01);
        assert_eq!(c.explorers, vec![ExplorerKind::Rnd]);
        assert_eq!(c.output_dir, PathBuf::from("out/x"));
        assert!(c.set("nonsense").is_err());
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        for e in Experiment::ALL {
            let c = RunConfig::for_experiment(e);
            let text = c.to_toml_string().unwrap();
            assert_eq!(RunConfig::from_toml(&text, None).unwrap(), c);
        }
    }
}
