//! Self-optimization: an outer ASA run whose parameters are schedule settings
//! of the inner runs and whose cost is measured by running them.

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::anneal::{run, RunConfig};
use crate::error::{AsaError, Result};
use crate::problem::{round_ties_toward_zero, ParamKind, ParameterSpec, ProblemSpec};

use super::bench::{bench, BenchOptions};
use super::report::lossless;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetaField {
    /// Shared parameter-schedule `m`.
    M,
    /// Shared parameter-schedule `n`.
    N,
    /// Shared parameter quenching factor.
    Quench,
    /// Reanneal cadence.
    Every,
}

impl MetaField {
    pub fn name(self) -> &'static str {
        match self {
            MetaField::M => "m",
            MetaField::N => "n",
            MetaField::Quench => "quench",
            MetaField::Every => "every",
        }
    }

    fn get(self, c: &RunConfig) -> f64 {
        match self {
            MetaField::M => c.schedule.m,
            MetaField::N => c.schedule.n,
            MetaField::Quench => c.schedule.quench,
            MetaField::Every => c.reanneal.every as f64,
        }
    }

    fn set(self, c: &mut RunConfig, v: f64) {
        match self {
            MetaField::M => c.schedule.m = v,
            MetaField::N => c.schedule.n = v,
            MetaField::Quench => c.schedule.quench = v,
            MetaField::Every => c.reanneal.every = v.max(1.0) as u64,
        }
    }
}

impl std::fmt::Display for MetaField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MetaField {
    type Err = AsaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m" => Ok(MetaField::M),
            "n" => Ok(MetaField::N),
            "quench" => Ok(MetaField::Quench),
            "every" => Ok(MetaField::Every),
            other => Err(AsaError::InvalidConfig(format!(
                "cannot tune `{other}`; expected m, n, quench or every"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaParam {
    pub field: MetaField,
    pub lower: f64,
    pub upper: f64,
}

impl MetaParam {
    pub fn default_for(field: MetaField) -> Self {
        let (lower, upper) = match field {
            MetaField::M => (1.0, 30.0),
            MetaField::N => (0.0, 10.0),
            MetaField::Quench => (0.25, 8.0),
            MetaField::Every => (10.0, 1000.0),
        };
        MetaParam { field, lower, upper }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MetaObjective {
    /// Mean generated states to reach the target; a seed that misses counts as twice the inner budget.
    #[default]
    GeneratedToTarget,
    /// Mean best cost after the inner budget.
    BestAtBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaConfig {
    pub tune: Vec<MetaParam>,
    pub objective: MetaObjective,
    /// Outer generated states, including the evaluation of the starting configuration.
    pub budget: u64,
    /// Generated-state budget of each inner run.
    pub inner_budget: u64,
    /// Inner seeds, the same for every meta-evaluation.
    pub seeds: Vec<u64>,
    #[serde(with = "lossless::option")]
    pub target: Option<f64>,
    pub outer_seed: u64,
    /// Inner runs executed concurrently within one meta-evaluation.
    pub workers: usize,
}

impl Default for MetaConfig {
    fn default() -> Self {
        MetaConfig {
            tune: vec![
                MetaParam::default_for(MetaField::M),
                MetaParam::default_for(MetaField::N),
            ],
            objective: MetaObjective::GeneratedToTarget,
            budget: 100,
            inner_budget: 10_000,
            seeds: (0..5).collect(),
            target: None,
            outer_seed: 0,
            workers: 1,
        }
    }
}

impl MetaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tune.is_empty() {
            return Err(AsaError::InvalidConfig(
                "self-optimization needs at least one field to tune".into(),
            ));
        }
        for (i, p) in self.tune.iter().enumerate() {
            if self.tune[..i].iter().any(|q| q.field == p.field) {
                return Err(AsaError::InvalidConfig(format!("`{}` is tuned twice", p.field)));
            }
            let positive = matches!(p.field, MetaField::M | MetaField::Quench | MetaField::Every);
            let ok = p.lower.is_finite()
                && p.upper.is_finite()
                && p.lower <= p.upper
                && (if positive { p.lower > 0.0 } else { p.lower >= 0.0 })
                && (p.field != MetaField::Every || p.lower >= 1.0);
            if !ok {
                return Err(AsaError::InvalidConfig(format!(
                    "invalid meta range [{}, {}] for `{}`",
                    p.lower, p.upper, p.field
                )));
            }
        }
        if self.inner_budget == 0 {
            return Err(AsaError::InvalidConfig("inner budget must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(AsaError::InvalidConfig(
                "self-optimization needs at least one inner seed".into(),
            ));
        }
        if self.workers == 0 {
            return Err(AsaError::InvalidConfig(
                "self-optimization needs at least one worker".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaTraceRow {
    pub values: Vec<f64>,
    #[serde(with = "lossless")]
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfOptReport {
    pub tuned: RunConfig,
    pub fields: Vec<MetaField>,
    pub tuned_values: Vec<f64>,
    pub default_values: Vec<f64>,
    /// Meta cost of the tuned configuration; `None` when no evaluation was made.
    #[serde(with = "lossless::option")]
    pub tuned_cost: Option<f64>,
    #[serde(with = "lossless::option")]
    pub default_cost: Option<f64>,
    pub evaluations: u64,
    /// Every meta-evaluation in order.
    pub trace: Vec<MetaTraceRow>,
}

/// Meta cost of one configuration on the fixed inner seeds. Inner-run errors score `+∞`.
pub fn meta_cost(problem: &ProblemSpec, config: &RunConfig, meta: &MetaConfig) -> f64 {
    let mut cfg = config.clone().with_max_generated(meta.inner_budget);
    cfg.trace = false;
    let options = BenchOptions {
        workers: meta.workers,
        ..BenchOptions::default()
    };
    let (target, tolerance) = match meta.objective {
        MetaObjective::GeneratedToTarget => (meta.target.unwrap_or(f64::NEG_INFINITY), 0.0),
        // Never stop early.
        MetaObjective::BestAtBudget => (f64::NEG_INFINITY, 0.0),
    };
    let Ok(summary) = bench(problem, &cfg, &meta.seeds, target, tolerance, &options) else {
        return f64::INFINITY;
    };
    let n = summary.runs.len() as f64;
    match meta.objective {
        MetaObjective::GeneratedToTarget => {
            let miss = 2.0 * meta.inner_budget as f64;
            summary
                .runs
                .iter()
                .map(|r| r.generated_to_target.map_or(miss, |g| g as f64))
                .sum::<f64>()
                / n
        }
        MetaObjective::BestAtBudget => summary.runs.iter().map(|r| r.best_cost).sum::<f64>() / n,
    }
}

fn apply(base: &RunConfig, tune: &[MetaParam], values: &[f64]) -> RunConfig {
    let mut c = base.clone();
    for (p, &v) in tune.iter().zip(values) {
        p.field.set(&mut c, v);
    }
    c
}

/// Tunes the selected fields of `base` by an outer ASA run started from `base` itself.
///
/// The tuned configuration is the best one evaluated, so its meta cost never
/// exceeds that of `base` on the same inner seeds.
pub fn self_optimize(meta: &MetaConfig, problem: &ProblemSpec, base: &RunConfig) -> Result<SelfOptReport> {
    meta.validate()?;
    base.validate()?;
    problem.validate()?;
    if meta.objective == MetaObjective::GeneratedToTarget && meta.target.is_none() {
        return Err(AsaError::InvalidConfig(
            "the generated-to-target objective needs a target cost".into(),
        ));
    }
    let fields: Vec<MetaField> = meta.tune.iter().map(|p| p.field).collect();
    let default_values: Vec<f64> = meta
        .tune
        .iter()
        .map(|p| p.field.get(base).clamp(p.lower, p.upper))
        .collect();
    let mut report = SelfOptReport {
        tuned: apply(base, &meta.tune, &default_values),
        fields,
        tuned_values: default_values.clone(),
        default_values: default_values.clone(),
        tuned_cost: None,
        default_cost: None,
        evaluations: 0,
        trace: Vec::new(),
    };
    if meta.budget == 0 {
        report.tuned = base.clone();
        return Ok(report);
    }

    let params = meta
        .tune
        .iter()
        .zip(&default_values)
        .map(|(p, &v)| match p.field {
            MetaField::Every => {
                let (lo, hi) = (p.lower.ceil(), p.upper.floor());
                ParameterSpec::integer(p.field.name(), lo, hi, round_ties_toward_zero(v).clamp(lo, hi))
            }
            _ => ParameterSpec::real(p.field.name(), p.lower, p.upper, v),
        })
        .collect::<Vec<_>>();
    if params.iter().any(|p| p.kind == ParamKind::Integer && p.lower > p.upper) {
        return Err(AsaError::InvalidConfig(
            "reanneal cadence range holds no integer".into(),
        ));
    }

    let trace = Arc::new(Mutex::new(Vec::new()));
    let outer_cost = {
        let trace = Arc::clone(&trace);
        let problem = problem.clone();
        let base = base.clone();
        let meta = meta.clone();
        move |x: &[f64]| {
            let cost = meta_cost(&problem, &apply(&base, &meta.tune, x), &meta);
            trace.lock().expect("trace lock").push(MetaTraceRow {
                values: x.to_vec(),
                cost,
            });
            cost
        }
    };
    let outer_problem = ProblemSpec::new(params, outer_cost);
    let mut outer = RunConfig::default()
        .with_seed(meta.outer_seed)
        .with_max_generated(meta.budget);
    outer.termination.stall.cycles = 0;
    outer.trace = false;
    let outer_report = run(&outer_problem, &outer).map_err(|e| match e {
        AsaError::NonFiniteInitialCost(_) => {
            AsaError::InvalidConfig("the starting configuration fails every inner run".into())
        }
        other => other,
    })?;

    let trace = std::mem::take(&mut *trace.lock().expect("trace lock"));
    report.default_cost = trace.first().map(|r| r.cost);
    report.tuned_cost = Some(outer_report.best_cost);
    report.tuned_values = outer_report.best_point.clone();
    report.tuned = apply(base, &meta.tune, &outer_report.best_point);
    report.evaluations = trace.len() as u64;
    report.trace = trace;
    Ok(report)
}
