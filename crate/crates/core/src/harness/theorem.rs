use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{schema_line, thread_pool, Experiment, RunConfig};
use crate::error::Result;
use crate::oracle::{check_theorems, ParameterGrid, SuiteConfig, TheoremSummary};

#[derive(Debug, Clone)]
pub struct TheoremReport {
    /// One suite per configured seed.
    pub suites: Vec<(u64, TheoremSummary)>,
    pub wall_ms: Vec<u128>,
}

#[derive(Serialize)]
struct Counterexample<'a> {
    seed: u64,
    check: &'a str,
    failures: usize,
    worst_margin: f64,
    grid: Option<&'a ParameterGrid>,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|(_, s)| s.all_passed())
    }

    pub fn summary_csv(&self) -> String {
        let mut out = schema_line(Experiment::TheoremVerify);
        out.push_str("seed,check,passed,evaluated,failures,worst_margin\n");
        for (seed, s) in &self.suites {
            for o in &s.outcomes {
                let _ = writeln!(
                    out,
                    "{seed},{},{},{},{},{}",
                    o.name, o.passed, o.evaluated, o.failures, o.worst_margin
                );
            }
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = schema_line(Experiment::TheoremVerify);
        out.push_str("seed,wall_ms\n");
        for ((seed, _), ms) in self.suites.iter().zip(&self.wall_ms) {
            let _ = writeln!(out, "{seed},{ms}");
        }
        out
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        for (seed, s) in &self.suites {
            let _ = writeln!(
                out,
                "seed {seed}: {} random + {} injected grids",
                s.random_instances, s.injected_instances
            );
            out.push_str(&s.to_table());
        }
        let _ = writeln!(out, "{}", if self.passed() { "ALL PASS" } else { "FAILURES FOUND" });
        out
    }

    /// Failing checks with their first counterexample grid, as JSON.
    pub fn counterexamples_json(&self) -> String {
        let list: Vec<Counterexample> = self
            .suites
            .iter()
            .flat_map(|(seed, s)| {
                s.failures().map(move |o| Counterexample {
                    seed: *seed,
                    check: o.name,
                    failures: o.failures,
                    worst_margin: o.worst_margin,
                    grid: o.example.as_ref(),
                })
            })
            .collect();
        serde_json::to_string_pretty(&list).expect("plain data serializes")
    }
}

pub fn run_theorem_verify(config: &RunConfig) -> Result<TheoremReport> {
    config.validate()?;
    let runs: Vec<(u64, TheoremSummary, u128)> = thread_pool(config)?.install(|| {
        config
            .seeds
            .par_iter()
            .map(|&seed| {
                let start = Instant::now();
                let summary = check_theorems(&SuiteConfig {
                    instance_count: config.theorem.instance_count,
                    seed,
                    fault: config.theorem.fault,
                })?;
                Ok((seed, summary, start.elapsed().as_millis()))
            })
            .collect::<Result<_>>()
    })?;
    Ok(TheoremReport {
        wall_ms: runs.iter().map(|r| r.2).collect(),
        suites: runs.into_iter().map(|(s, summary, _)| (s, summary)).collect(),
    })
}
