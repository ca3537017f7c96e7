use std::fmt::Write as _;

use rand::Rng as _;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    information_gain, intrinsic_rewards, mle_index, posterior_expected_log_mse, ParameterGrid,
    ThetaPolicy, TOLERANCE,
};
use crate::error::{Error, Result};
use crate::numeric::rng::{stream, streams, Rng};

/// `c·r_exp` below this counts as zero for the zero-equivalence premise.
const ZERO_REWARD: f64 = 1e-12;

/// Deliberate corruption of one check, used to test the failure path.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    FlipMonotoneSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub instance_count: usize,
    pub seed: u64,
    #[doc(hidden)]
    pub fault: Option<Fault>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            instance_count: 1000,
            seed: 0,
            fault: None,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.instance_count == 0 {
            return Err(Error::InvalidConfig("oracle.instance_count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Aggregate of one named check over all instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Instances on which the check applied.
    pub evaluated: usize,
    pub failures: usize,
    /// Smallest margin seen; for existence checks, the number of witnesses.
    pub worst_margin: f64,
    /// First failing grid, or the first witness of an existence check.
    pub example: Option<ParameterGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremSummary {
    pub random_instances: usize,
    pub injected_instances: usize,
    pub outcomes: Vec<CheckOutcome>,
}

impl TheoremSummary {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn outcome(&self, name: &str) -> Option<&CheckOutcome> {
        self.outcomes.iter().find(|o| o.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,passed,evaluated,failures,worst_margin\n");
        for o in &self.outcomes {
            let _ = writeln!(
                out,
                "{},{},{},{},{:e}",
                o.name, o.passed, o.evaluated, o.failures, o.worst_margin
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<32} {:<6} {:>9} {:>8} {:>14}\n",
            "check", "status", "evaluated", "failures", "worst_margin"
        );
        for o in &self.outcomes {
            let _ = writeln!(
                out,
                "{:<32} {:<6} {:>9} {:>8} {:>14.6e}",
                o.name,
                if o.passed { "pass" } else { "FAIL" },
                o.evaluated,
                o.failures,
                o.worst_margin
            );
        }
        out
    }
}

/// Grid with 2–100 points, log-uniform MSE on `[1e-3, 1e3]`, a flat
/// Dirichlet prior and log-uniform `c` on `[0.5, 50]`.
pub fn random_grid(rng: &mut Rng) -> ParameterGrid {
    let n = rng.random_range(2..=100);
    let mse = (0..n).map(|_| log_uniform(rng, 1e-3, 1e3)).collect();
    let c = log_uniform(rng, 0.5, 50.0);
    ParameterGrid::new(dirichlet_flat(rng, n), mse, c).expect("generator respects grid invariants")
}

fn log_uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..=hi.ln()).exp()
}

fn dirichlet_flat(rng: &mut Rng, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}

fn constant_grid(rng: &mut Rng) -> ParameterGrid {
    let n = rng.random_range(2..=100);
    let m = log_uniform(rng, 1e-3, 1e3);
    let c = log_uniform(rng, 0.5, 50.0);
    ParameterGrid::new(dirichlet_flat(rng, n), vec![m; n], c).expect("valid")
}

/// Distinct MSE values a few ulps apart: injective but numerically flat.
fn perturbed_constant_grid(rng: &mut Rng) -> ParameterGrid {
    let n = rng.random_range(2..=20);
    let m = log_uniform(rng, 1e-3, 1e3);
    let c = log_uniform(rng, 0.5, 5.0);
    let mse = (0..n).map(|i| m * (1.0 + 2.0 * f64::EPSILON * i as f64)).collect();
    ParameterGrid::new(dirichlet_flat(rng, n), mse, c).expect("valid")
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Random,
    Constant,
    Perturbed,
}

const NAMES: [&str; 7] = [
    "kl_identity",
    "t1_1_monotone_bound",
    "t1_2_constant_zero",
    "t1_3_zero_reward_zero_gain",
    "l1_mle_dominates",
    "t2_submaximal_counterexample",
    "t2_none_under_mle",
];

/// Per-instance margins, `None` where a check does not apply.
struct InstanceResult {
    grid: ParameterGrid,
    margins: [Option<f64>; 7],
}

fn evaluate(grid: ParameterGrid, kind: Kind, fault: Option<Fault>) -> InstanceResult {
    let ig = information_gain(&grid);
    let mle = intrinsic_rewards(&grid, ThetaPolicy::ExactMle).expect("mle always exists");
    let c = grid.c();
    let mut margins = [None; 7];

    margins[0] = Some(TOLERANCE - ig.discrepancy());

    let r_exp = match fault {
        Some(Fault::FlipMonotoneSign) => -mle.r_exp,
        None => mle.r_exp,
    };
    margins[1] = Some(c * r_exp - ig.kl + TOLERANCE);

    if kind == Kind::Constant {
        margins[2] = Some(TOLERANCE - ig.kl.abs().max(mle.r_exp.abs()));
    }

    if c * mle.r_exp < ZERO_REWARD {
        margins[3] = Some(TOLERANCE - ig.kl);
    }

    let min_log = grid.mse()[mle_index(&grid)].ln();
    margins[4] = Some(c * (posterior_expected_log_mse(&grid) - min_log) + TOLERANCE);

    let witnesses = |report: &super::OracleReport| {
        ig.kl > TOLERANCE && report.r_point.iter().any(|&r| r < -TOLERANCE)
    };
    if let Some(sub) = intrinsic_rewards(&grid, ThetaPolicy::ConditionSatisfyingSubmaximal) {
        let condition = sub.check("theta_d_condition").is_some_and(|k| k.passed);
        margins[5] = Some(if condition && witnesses(&sub) { 1.0 } else { 0.0 });
    }
    margins[6] = Some(if witnesses(&mle) { -1.0 } else { 0.0 });

    InstanceResult { grid, margins }
}

/// Runs every check over `instance_count` random grids plus injected
/// constant and perturbed-constant grids.
pub fn check_theorems(config: &SuiteConfig) -> Result<TheoremSummary> {
    config.validate()?;
    let injected = (config.instance_count / 100).max(1);
    let mut jobs: Vec<(u64, Kind)> = (0..config.instance_count as u64).map(|i| (i, Kind::Random)).collect();
    let base = config.instance_count as u64;
    jobs.extend((0..injected as u64).map(|i| (base + i, Kind::Constant)));
    jobs.extend((0..injected as u64).map(|i| (base + injected as u64 + i, Kind::Perturbed)));

    let results: Vec<InstanceResult> = jobs
        .par_iter()
        .map(|&(id, kind)| {
            let mut rng = stream(config.seed, (streams::ORACLE << 32) | id);
            let grid = match kind {
                Kind::Random => random_grid(&mut rng),
                Kind::Constant => constant_grid(&mut rng),
                Kind::Perturbed => perturbed_constant_grid(&mut rng),
            };
            evaluate(grid, kind, config.fault)
        })
        .collect();

    let mut outcomes = Vec::with_capacity(NAMES.len());
    for (k, name) in NAMES.iter().enumerate() {
        let applicable: Vec<(&InstanceResult, f64)> =
            results.iter().filter_map(|r| r.margins[k].map(|m| (r, m))).collect();
        let outcome = if k == 5 {
            let witnesses: Vec<_> = applicable.iter().filter(|(_, m)| *m > 0.0).collect();
            CheckOutcome {
                name,
                passed: !witnesses.is_empty(),
                evaluated: applicable.len(),
                failures: usize::from(witnesses.is_empty()),
                worst_margin: witnesses.len() as f64,
                example: witnesses.first().map(|(r, _)| r.grid.clone()),
            }
        } else {
            let failing: Vec<_> = applicable.iter().filter(|(_, m)| *m < 0.0).collect();
            CheckOutcome {
                name,
                // zero-equivalence premises must actually be exercised
                passed: failing.is_empty() && !applicable.is_empty(),
                evaluated: applicable.len(),
                failures: failing.len(),
                worst_margin: applicable.iter().map(|(_, m)| *m).fold(f64::INFINITY, f64::min),
                example: failing.first().map(|(r, _)| r.grid.clone()),
            }
        };
        outcomes.push(outcome);
    }
    Ok(TheoremSummary {
        random_instances: config.instance_count,
        injected_instances: 2 * injected,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let s = check_theorems(&SuiteConfig {
            instance_count: 200,
            ..SuiteConfig::default()
        })
        .unwrap();
        assert!(s.all_passed(), "{}", s.to_table());
    }

    #[test]
    fn flipped_sign_is_caught() {
        let s = check_theorems(&SuiteConfig {
            instance_count: 50,
            fault: Some(Fault::FlipMonotoneSign),
            ..SuiteConfig::default()
        })
        .unwrap();
        let o = s.outcome("t1_1_monotone_bound").unwrap();
        assert!(!o.passed && o.example.is_some());
    }

    #[test]
    fn zero_instances_rejected() {
        assert!(check_theorems(&SuiteConfig {
            instance_count: 0,
            ..SuiteConfig::default()
        })
        .is_err());
    }

    #[test]
    fn generated_grids_are_valid() {
        let mut rng = stream(3, 0);
        for _ in 0..100 {
            let g = random_grid(&mut rng);
            assert!((2..=100).contains(&g.len()));
            assert!(g.mse().iter().all(|m| (1e-3 * (1.0 - 1e-12)..=1e3 * (1.0 + 1e-12)).contains(m)));
            assert!((0.5 * (1.0 - 1e-12)..=50.0 * (1.0 + 1e-12)).contains(&g.c()));
        }
    }
}
