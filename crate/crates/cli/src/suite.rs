use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use excbo::acquisition::{run_algorithm, RunTrace};
use excbo::benchmarks::{build, Benchmark};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{Result, RunnerError};
use crate::oracle::{compute_regret, estimate_oracle_optimum};

/// Source of ground truths; the registry in production, fault-injecting
/// variants in tests.
pub trait BenchmarkProvider: Sync {
    fn benchmark(&self, cfg: &ExperimentConfig, algorithm: &str, seed: u64) -> excbo::Result<Benchmark>;
}

pub struct Registry;

impl BenchmarkProvider for Registry {
    fn benchmark(&self, cfg: &ExperimentConfig, _algorithm: &str, seed: u64) -> excbo::Result<Benchmark> {
        build(&cfg.benchmark, &cfg.noise.spec(), &cfg.epidemic, seed)
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub trace: RunTrace,
    /// Expected reward of each row's action.
    pub expected: Vec<f64>,
    /// Cumulative regret per row; zero on initial-design rows.
    pub cum_regret: Vec<f64>,
    pub oracle_key: String,
}

impl RunRecord {
    /// Best expected reward among actions played up to each row.
    pub fn best_expected(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.expected
            .iter()
            .map(|&v| {
                best = best.max(v);
                best
            })
            .collect()
    }

    /// Cumulative regret after optimization round `t` (0 before any).
    pub fn regret_at(&self, t: usize) -> f64 {
        self.trace
            .rows
            .iter()
            .zip(&self.cum_regret)
            .filter(|(r, _)| r.round <= t)
            .map(|(_, c)| *c)
            .next_back()
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub algorithm: String,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEntry {
    /// Brute-force search result.
    pub estimate: f64,
    /// Value used for regret: the estimate, raised to any better expected
    /// reward reached by a run.
    pub y_star: f64,
}

#[derive(Debug, Clone)]
pub struct ResultBundle {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub runs: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    pub oracle: BTreeMap<String, OracleEntry>,
    pub wall_clock: Duration,
}

impl ResultBundle {
    pub fn run(&self, algorithm: &str, seed: u64) -> Option<&RunRecord> {
        self.runs
            .iter()
            .find(|r| r.trace.algorithm == algorithm && r.trace.seed == seed)
    }

    /// 0 when every run finished, 3 when some failed.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            3
        }
    }
}

/// Runs every `(algorithm, seed)` pair, isolating failures, then computes
/// oracle optima and regret. `jobs` bounds the worker threads.
pub fn run_suite<P: BenchmarkProvider>(cfg: &ExperimentConfig, provider: &P, jobs: Option<usize>) -> Result<ResultBundle> {
    cfg.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| RunnerError::Validation(format!("cannot start worker pool: {e}")))?;

    let pairs: Vec<(String, u64)> = cfg
        .algorithms
        .iter()
        .flat_map(|a| cfg.seeds.iter().map(move |&s| (a.clone(), s)))
        .collect();

    type Outcome = std::result::Result<(RunTrace, Vec<f64>, Benchmark), RunFailure>;
    let outcomes: Vec<Outcome> = pool.install(|| {
        pairs
            .par_iter()
            .map(|(alg, seed)| {
                let fail = |e: excbo::Error| RunFailure {
                    algorithm: alg.clone(),
                    seed: *seed,
                    message: e.to_string(),
                };
                let bench = provider.benchmark(cfg, alg, *seed).map_err(fail)?;
                let mut trace = run_algorithm(alg, &bench.scm, &cfg.loop_config(*seed)).map_err(fail)?;
                // Report the configured seed id rather than the derived stream seed.
                trace.seed = *seed;
                let expected = trace
                    .rows
                    .iter()
                    .map(|r| bench.expected_reward(&r.action))
                    .collect::<excbo::Result<Vec<f64>>>()
                    .map_err(fail)?;
                Ok((trace, expected, bench))
            })
            .collect()
    });

    let mut oracle: BTreeMap<String, OracleEntry> = BTreeMap::new();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    let mut successes = Vec::new();
    for o in outcomes {
        match o {
            Ok(v) => successes.push(v),
            Err(f) => failures.push(f),
        }
    }

    // Oracle per distinct reward surface, in canonical order.
    for (_, _, bench) in &successes {
        if !oracle.contains_key(&bench.key) {
            let estimate = pool.install(|| estimate_oracle_optimum(bench, cfg.oracle_budget, cfg.master_seed));
            oracle.insert(
                bench.key.clone(),
                OracleEntry {
                    estimate,
                    y_star: estimate,
                },
            );
        }
    }
    for (_, expected, bench) in &successes {
        let entry = oracle.get_mut(&bench.key).expect("oracle computed above");
        for &v in expected {
            entry.y_star = entry.y_star.max(v);
        }
    }

    for (trace, expected, bench) in successes {
        let y_star = oracle[&bench.key].y_star;
        let bo: Vec<f64> = trace
            .rows
            .iter()
            .zip(&expected)
            .filter(|(r, _)| r.round > 0)
            .map(|(_, v)| *v)
            .collect();
        let regret = compute_regret(&bo, y_star)?;
        let initial = trace.rows.len() - bo.len();
        let mut cum_regret = vec![0.0; initial];
        cum_regret.extend(regret);
        runs.push(RunRecord {
            trace,
            expected,
            cum_regret,
            oracle_key: bench.key,
        });
    }

    Ok(ResultBundle {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        runs,
        failures,
        oracle,
        wall_clock: start.elapsed(),
    })
}
