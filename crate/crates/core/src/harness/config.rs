//! TOML run configuration.
//!
//! A document names either a catalog problem or a custom one whose cost is an
//! arithmetic expression over the parameter names. Every section is optional
//! and unknown keys are errors.
//!
//! ```toml
//! algorithm = "asa"
//! seed = 7
//!
//! [problem]
//! cost = "(x - 1)^2 + 10 * (y + 0.5)^2"
//! feasible = "x + y < 3"
//!
//! [[problem.parameter]]
//! name = "x"
//! lower = -5.0
//! upper = 5.0
//!
//! [[problem.parameter]]
//! name = "y"
//! lower = -5
//! upper = 5
//! kind = "integer"
//! initial = 2
//!
//! [schedule]
//! quench = 2.0
//!
//! [termination]
//! max_generated = 20000
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use evalexpr::{build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};
use serde::Deserialize;

use crate::anneal::{GenerationMode, ReannealTrigger, RunConfig, ScaleSettings};
use crate::distributions::{AcceptanceForm, CauchyMode};
use crate::error::{AsaError, Result};
use crate::problem::{round_ties_toward_zero, ParamKind, ParameterSpec, ProblemSpec};
use crate::testfns::{catalog_with_dim, BenchmarkProblem};

use super::selfopt::{MetaConfig, MetaField, MetaObjective, MetaParam};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub algorithm: Option<String>,
    pub seed: Option<u64>,
    pub fd_step: Option<f64>,
    pub sampling: Option<bool>,
    pub frozen: Option<bool>,
    pub trace: Option<bool>,
    pub ba_k0: Option<f64>,
    pub problem: Option<ProblemSection>,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub acceptance: AcceptanceSection,
    #[serde(default)]
    pub generation: GenerationSection,
    #[serde(default)]
    pub reanneal: ReannealSection,
    #[serde(default)]
    pub termination: TerminationSection,
    #[serde(default)]
    pub batch: BatchSection,
    pub selfopt: Option<SelfoptSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub name: Option<String>,
    pub dim: Option<usize>,
    pub cost: Option<String>,
    pub feasible: Option<String>,
    #[serde(default)]
    pub parameter: Vec<ParameterSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSection {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: Option<String>,
    pub initial: Option<f64>,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scales {
    pub m: Option<f64>,
    pub n: Option<f64>,
    pub quench: Option<f64>,
}

impl Scales {
    fn over(&self, base: ScaleSettings) -> ScaleSettings {
        ScaleSettings {
            m: self.m.unwrap_or(base.m),
            n: self.n.unwrap_or(base.n),
            quench: self.quench.unwrap_or(base.quench),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub m: Option<f64>,
    pub n: Option<f64>,
    pub quench: Option<f64>,
    /// Per-parameter overrides keyed by parameter name.
    #[serde(default)]
    pub parameter: BTreeMap<String, Scales>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceSection {
    pub m: Option<f64>,
    pub n: Option<f64>,
    pub quench: Option<f64>,
    pub form: Option<String>,
    pub tsallis_q: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationSection {
    pub mode: Option<String>,
    pub cauchy: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReannealSection {
    pub enabled: Option<bool>,
    pub every: Option<u64>,
    pub trigger: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminationSection {
    pub max_generated: Option<u64>,
    pub target: Option<f64>,
    pub stall_epsilon: Option<f64>,
    pub stall_cycles: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSection {
    pub size: Option<usize>,
    pub workers: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfoptSection {
    pub budget: Option<u64>,
    pub inner_budget: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub objective: Option<String>,
    pub target: Option<f64>,
    pub outer_seed: Option<u64>,
    pub tune: Option<Vec<String>>,
    pub m_range: Option<[f64; 2]>,
    pub n_range: Option<[f64; 2]>,
    pub quench_range: Option<[f64; 2]>,
    pub every_range: Option<[f64; 2]>,
    /// Present only to reject a second meta-level with a clear message.
    pub selfopt: Option<toml::Value>,
}

/// A fully resolved configuration.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub problem_name: String,
    pub problem: ProblemSpec,
    /// Known optimum and tolerance when the problem comes from the catalog.
    pub benchmark: Option<BenchmarkProblem>,
    pub run: RunConfig,
    pub meta: Option<MetaConfig>,
}

/// Parses and resolves a configuration document; the document must name a problem.
pub fn parse_config(text: &str) -> Result<LoadedConfig> {
    ConfigFile::parse(text)?.resolve(None)
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| AsaError::Parse(e.to_string()))
    }

    /// Fills defaults and builds the problem. `problem_override` names a catalog
    /// problem that replaces whatever the document specifies.
    pub fn resolve(&self, problem_override: Option<&str>) -> Result<LoadedConfig> {
        let (problem_name, problem, benchmark) = match (problem_override, &self.problem) {
            (Some(name), section) => {
                let dim = section.as_ref().and_then(|s| s.dim);
                let b = catalog_with_dim(name, dim)?;
                (name.to_string(), b.problem.clone(), Some(b))
            }
            (None, Some(section)) => build_problem(section)?,
            (None, None) => {
                return Err(AsaError::InvalidConfig(
                    "no problem given (add a [problem] section)".into(),
                ));
            }
        };
        let run = self.run_config()?;
        let meta = self.selfopt.as_ref().map(|s| meta_config(s, &run)).transpose()?;
        Ok(LoadedConfig {
            problem_name,
            problem,
            benchmark,
            run,
            meta,
        })
    }

    /// The run configuration alone, with defaults for everything left out.
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        if let Some(a) = &self.algorithm {
            c.algorithm = a.parse()?;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(v) = self.fd_step {
            c.fd_step = v;
        }
        if let Some(v) = self.sampling {
            c.sampling = v;
        }
        if let Some(v) = self.frozen {
            c.frozen = v;
        }
        if let Some(v) = self.trace {
            c.trace = v;
        }
        if let Some(v) = self.ba_k0 {
            c.ba_k0 = v;
        }

        let s = &self.schedule;
        c.schedule = Scales {
            m: s.m,
            n: s.n,
            quench: s.quench,
        }
        .over(c.schedule);
        for (name, o) in &s.parameter {
            c.parameter_schedules.insert(name.clone(), o.over(c.schedule));
        }

        let a = &self.acceptance;
        c.acceptance_schedule = Scales {
            m: a.m,
            n: a.n,
            quench: a.quench,
        }
        .over(c.acceptance_schedule);
        c.acceptance_form = match (a.form.as_deref(), a.tsallis_q) {
            (None | Some("metropolis-exp"), None) => AcceptanceForm::MetropolisExp,
            (Some("logistic"), None) => AcceptanceForm::Logistic,
            (Some("tsallis"), Some(q)) => AcceptanceForm::Tsallis { q },
            (Some("tsallis"), None) => {
                return Err(AsaError::InvalidConfig(
                    "acceptance form `tsallis` needs tsallis_q".into(),
                ));
            }
            (_, Some(_)) => {
                return Err(AsaError::InvalidConfig(
                    "tsallis_q is only valid with form = \"tsallis\"".into(),
                ));
            }
            (Some(other), None) => {
                return Err(AsaError::InvalidConfig(format!(
                    "unknown acceptance form `{other}`; expected metropolis-exp, logistic or tsallis"
                )));
            }
        };

        if let Some(mode) = self.generation.mode.as_deref() {
            c.generation = match mode {
                "all-coordinates" => GenerationMode::AllCoordinates,
                "sequential-coordinate" => GenerationMode::SequentialCoordinate,
                other => {
                    return Err(AsaError::InvalidConfig(format!(
                        "unknown generation mode `{other}`; expected all-coordinates or sequential-coordinate"
                    )));
                }
            };
        }
        if let Some(mode) = self.generation.cauchy.as_deref() {
            c.cauchy_mode = match mode {
                "product" => CauchyMode::Product,
                "isotropic" => CauchyMode::Isotropic,
                other => {
                    return Err(AsaError::InvalidConfig(format!(
                        "unknown cauchy mode `{other}`; expected product or isotropic"
                    )));
                }
            };
        }

        let r = &self.reanneal;
        if let Some(v) = r.enabled {
            c.reanneal.enabled = v;
        }
        if let Some(v) = r.every {
            c.reanneal.every = v;
        }
        if let Some(t) = r.trigger.as_deref() {
            c.reanneal.trigger = match t {
                "accepted" => ReannealTrigger::Accepted,
                "generated" => ReannealTrigger::Generated,
                other => {
                    return Err(AsaError::InvalidConfig(format!(
                        "unknown reanneal trigger `{other}`; expected accepted or generated"
                    )));
                }
            };
        }

        let t = &self.termination;
        if let Some(v) = t.max_generated {
            c.termination.max_generated = v;
        }
        c.termination.target_cost = t.target;
        if let Some(v) = t.stall_epsilon {
            c.termination.stall.epsilon = v;
        }
        if let Some(v) = t.stall_cycles {
            c.termination.stall.cycles = v;
        }

        if let Some(v) = self.batch.size {
            c.batch.size = v;
        }
        if let Some(v) = self.batch.workers {
            c.batch.workers = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn build_problem(s: &ProblemSection) -> Result<(String, ProblemSpec, Option<BenchmarkProblem>)> {
    match (&s.name, &s.cost) {
        (Some(_), Some(_)) => Err(AsaError::InvalidConfig(
            "[problem] takes either a catalog `name` or a custom `cost`, not both".into(),
        )),
        (Some(name), None) => {
            if !s.parameter.is_empty() || s.feasible.is_some() {
                return Err(AsaError::InvalidConfig(format!(
                    "catalog problem `{name}` does not take parameters or a feasibility expression"
                )));
            }
            let b = catalog_with_dim(name, s.dim)?;
            Ok((name.clone(), b.problem.clone(), Some(b)))
        }
        (None, Some(cost)) => {
            if s.dim.is_some() {
                return Err(AsaError::InvalidConfig(
                    "`dim` applies to catalog problems; list parameters instead".into(),
                ));
            }
            Ok((
                "custom".into(),
                custom_problem(cost, s.feasible.as_deref(), &s.parameter)?,
                None,
            ))
        }
        (None, None) => Err(AsaError::InvalidConfig("[problem] needs `name` or `cost`".into())),
    }
}

fn parameter_spec(p: &ParameterSection) -> Result<ParameterSpec> {
    let kind = match p.kind.as_deref() {
        None | Some("real") => ParamKind::Real,
        Some("integer") => ParamKind::Integer,
        Some(other) => {
            return Err(AsaError::InvalidConfig(format!(
                "parameter `{}` has unknown kind `{other}`; expected real or integer",
                p.name
            )));
        }
    };
    if p.lower > p.upper {
        return Err(AsaError::ParameterRange {
            name: p.name.clone(),
            lower: p.lower,
            upper: p.upper,
        });
    }
    let initial = p.initial.unwrap_or_else(|| {
        let mid = 0.5 * (p.lower + p.upper);
        match kind {
            ParamKind::Real => mid,
            ParamKind::Integer => round_ties_toward_zero(mid).clamp(p.lower.ceil(), p.upper.floor()),
        }
    });
    let spec = ParameterSpec {
        name: p.name.clone(),
        lower: p.lower,
        upper: p.upper,
        kind,
        initial,
    };
    spec.validate()?;
    Ok(spec)
}

fn compile(what: &str, text: &str) -> Result<Arc<Node<DefaultNumericTypes>>> {
    build_operator_tree::<DefaultNumericTypes>(text)
        .map(Arc::new)
        .map_err(|e| AsaError::Parse(format!("{what} expression `{text}`: {e}")))
}

fn bind(names: &[String], x: &[f64]) -> std::result::Result<HashMapContext<DefaultNumericTypes>, String> {
    let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
    for (name, &v) in names.iter().zip(x) {
        ctx.set_value(name.clone(), Value::Float(v))
            .map_err(|e| e.to_string())?;
    }
    Ok(ctx)
}

/// Builds a problem whose cost and optional feasibility test are expressions over the parameter names.
pub fn custom_problem(cost: &str, feasible: Option<&str>, params: &[ParameterSection]) -> Result<ProblemSpec> {
    let specs = params.iter().map(parameter_spec).collect::<Result<Vec<_>>>()?;
    for (i, p) in specs.iter().enumerate() {
        let ident = p
            .name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && p.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !ident {
            return Err(AsaError::InvalidConfig(format!(
                "parameter name `{}` is not a valid identifier",
                p.name
            )));
        }
        if specs[..i].iter().any(|q| q.name == p.name) {
            return Err(AsaError::InvalidConfig(format!(
                "parameter `{}` is listed twice",
                p.name
            )));
        }
    }
    let names: Arc<Vec<String>> = Arc::new(specs.iter().map(|p| p.name.clone()).collect());

    let cost_tree = compile("cost", cost)?;
    let cost_names = Arc::clone(&names);
    let mut problem = ProblemSpec::with_fallible_cost(specs, move |x| {
        let ctx = bind(&cost_names, x)?;
        cost_tree.eval_number_with_context(&ctx).map_err(|e| e.to_string())
    });
    // Fail at load time, not at the first generated state.
    problem
        .cost(&problem.initial_point())
        .map_err(|e| AsaError::InvalidConfig(format!("cost expression `{cost}` at the initial point: {e}")))?;

    if let Some(text) = feasible {
        let tree = compile("feasible", text)?;
        let check = bind(&names, &problem.initial_point())
            .and_then(|ctx| tree.eval_boolean_with_context(&ctx).map_err(|e| e.to_string()));
        if let Err(e) = check {
            return Err(AsaError::InvalidConfig(format!("feasible expression `{text}`: {e}")));
        }
        problem = problem.with_feasibility(move |x| {
            bind(&names, x)
                .and_then(|ctx| tree.eval_boolean_with_context(&ctx).map_err(|e| e.to_string()))
                .unwrap_or(false)
        });
    }
    Ok(problem)
}

fn meta_config(s: &SelfoptSection, run: &RunConfig) -> Result<MetaConfig> {
    if s.selfopt.is_some() {
        return Err(AsaError::InvalidConfig(
            "self-optimization is limited to one meta-level; remove the nested [selfopt.selfopt]".into(),
        ));
    }
    let mut meta = MetaConfig::default();
    if let Some(v) = s.budget {
        meta.budget = v;
    }
    if let Some(v) = s.inner_budget {
        meta.inner_budget = v;
    } else {
        meta.inner_budget = run.termination.max_generated;
    }
    if let Some(v) = &s.seeds {
        meta.seeds = v.clone();
    }
    if let Some(v) = s.outer_seed {
        meta.outer_seed = v;
    }
    meta.target = s.target.or(run.termination.target_cost);
    if let Some(o) = s.objective.as_deref() {
        meta.objective = match o {
            "generated-to-target" => MetaObjective::GeneratedToTarget,
            "best-at-budget" => MetaObjective::BestAtBudget,
            other => {
                return Err(AsaError::InvalidConfig(format!(
                    "unknown meta objective `{other}`; expected generated-to-target or best-at-budget"
                )));
            }
        };
    }
    if let Some(names) = &s.tune {
        meta.tune = names
            .iter()
            .map(|n| {
                let field: MetaField = n.parse()?;
                Ok(MetaParam::default_for(field))
            })
            .collect::<Result<_>>()?;
    }
    let ranges = [
        (MetaField::M, s.m_range),
        (MetaField::N, s.n_range),
        (MetaField::Quench, s.quench_range),
        (MetaField::Every, s.every_range),
    ];
    for (field, range) in ranges {
        let Some([lo, hi]) = range else { continue };
        match meta.tune.iter_mut().find(|p| p.field == field) {
            Some(p) => {
                p.lower = lo;
                p.upper = hi;
            }
            None => {
                return Err(AsaError::InvalidConfig(format!(
                    "a range is given for `{field}` but it is not in `tune`"
                )));
            }
        }
    }
    meta.validate()?;
    Ok(meta)
}
