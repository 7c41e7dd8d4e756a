//! Multi-seed benchmarking: how many generated states each seed needs to first
//! reach a target cost, and aggregate statistics over the seeds that made it.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anneal::{run, Algorithm, RunConfig};
use crate::error::{AsaError, Result};
use crate::problem::{round_ties_toward_zero, ParamKind, ProblemSpec};

/// Random starting points that fail the feasibility test are redrawn this many times.
const MAX_START_DRAWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchOptions {
    /// Concurrent runs; each run is internally serial (or batch-parallel per its config).
    pub workers: usize,
    /// Draw each seed's starting point uniformly from the parameter box.
    pub random_initial: bool,
    /// Record wall-clock time per seed. Summaries with timings are not reproducible.
    pub timing: bool,
    /// Keep the configured stall rule. Off by default: a seed runs until it
    /// attains the target or exhausts its budget.
    pub stop_on_stall: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            workers: 1,
            random_initial: true,
            timing: false,
            stop_on_stall: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    /// Generated states when the target was first attained.
    pub generated_to_target: Option<u64>,
    pub best_cost: f64,
    pub generated: u64,
    pub initial_point: Vec<f64>,
    pub best_point: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (zero for a single value).
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Option<Aggregate> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            0.5 * (sorted[mid - 1] + sorted[mid])
        };
        Some(Aggregate {
            count: values.len(),
            mean,
            std,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            median,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub algorithm: Algorithm,
    #[serde(with = "super::report::lossless")]
    pub target: f64,
    pub tolerance: f64,
    pub max_generated: u64,
    /// One entry per seed, in the order the seeds were given.
    pub runs: Vec<SeedResult>,
    pub successes: usize,
    pub success_rate: f64,
    /// Generated-to-target statistics over successful seeds only; `None` when no seed succeeded.
    pub generated_to_target: Option<Aggregate>,
    /// Best-cost statistics over all seeds.
    pub best_cost: Aggregate,
    /// Set when no seed attained the target.
    pub failed: bool,
}

impl BenchSummary {
    pub fn failures(&self) -> impl Iterator<Item = &SeedResult> {
        self.runs.iter().filter(|r| r.generated_to_target.is_none())
    }
}

/// Uniform random point in the parameter box, satisfying the feasibility test if there is one.
pub fn random_initial_point(problem: &ProblemSpec, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // The run itself uses the low streams of this seed.
    rng.set_stream(u64::MAX);
    for _ in 0..MAX_START_DRAWS {
        let x: Vec<f64> = problem
            .parameters
            .iter()
            .map(|p| {
                if p.is_fixed() {
                    return p.lower;
                }
                match p.kind {
                    ParamKind::Real => rng.random_range(p.lower..=p.upper),
                    ParamKind::Integer => {
                        let (lo, hi) = p.admissible_bounds();
                        round_ties_toward_zero(rng.random_range(lo as i64..=hi as i64) as f64)
                    }
                }
            })
            .collect();
        if problem.is_feasible(&x) {
            return Ok(x);
        }
    }
    Err(AsaError::InfeasibleStart(format!(
        "no feasible random start found in {MAX_START_DRAWS} draws for seed {seed}"
    )))
}

fn run_seed(
    problem: &ProblemSpec,
    config: &RunConfig,
    seed: u64,
    target: f64,
    options: &BenchOptions,
) -> Result<SeedResult> {
    let started = Instant::now();
    let start = if options.random_initial {
        random_initial_point(problem, seed)?
    } else {
        problem.initial_point()
    };
    let p = problem.clone().with_initial(&start)?;
    let mut cfg = config.clone().with_seed(seed).with_target(Some(target));
    cfg.trace = false;
    if !options.stop_on_stall {
        cfg.termination.stall.cycles = 0;
    }
    let report = run(&p, &cfg)?;
    Ok(SeedResult {
        seed,
        generated_to_target: report.generated_at_target,
        best_cost: report.best_cost,
        generated: report.counters.generated,
        initial_point: start,
        best_point: report.best_point,
        wall_seconds: options.timing.then(|| started.elapsed().as_secs_f64()),
    })
}

/// Runs every seed and aggregates. A seed succeeds once any evaluated cost is
/// at or below `target + tolerance`.
pub fn bench(
    problem: &ProblemSpec,
    config: &RunConfig,
    seeds: &[u64],
    target: f64,
    tolerance: f64,
    options: &BenchOptions,
) -> Result<BenchSummary> {
    if seeds.is_empty() {
        return Err(AsaError::InvalidConfig("bench needs at least one seed".into()));
    }
    if options.workers == 0 {
        return Err(AsaError::InvalidConfig("bench needs at least one worker".into()));
    }
    if target.is_nan() || !(tolerance >= 0.0) {
        return Err(AsaError::InvalidConfig(format!(
            "invalid target {target} or tolerance {tolerance}"
        )));
    }
    problem.validate()?;
    config.validate()?;
    let threshold = target + tolerance;

    let runs: Vec<SeedResult> = if options.workers == 1 {
        seeds
            .iter()
            .map(|&s| run_seed(problem, config, s, threshold, options))
            .collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(|e| AsaError::InvalidConfig(format!("worker pool: {e}")))?;
        pool.install(|| {
            seeds
                .par_iter()
                .map(|&s| run_seed(problem, config, s, threshold, options))
                .collect::<Result<_>>()
        })?
    };

    let hits: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.generated_to_target.map(|g| g as f64))
        .collect();
    let bests: Vec<f64> = runs.iter().map(|r| r.best_cost).collect();
    let successes = hits.len();
    Ok(BenchSummary {
        algorithm: config.algorithm,
        target,
        tolerance,
        max_generated: config.termination.max_generated,
        successes,
        success_rate: successes as f64 / runs.len() as f64,
        generated_to_target: Aggregate::of(&hits),
        best_cost: Aggregate::of(&bests).expect("at least one seed"),
        failed: successes == 0,
        runs,
    })
}
