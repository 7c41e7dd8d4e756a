use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use asa_core::harness::config::ProblemSection;
use asa_core::harness::{
    bench, decade_indices, emit_report, schedule_diagnostics, self_optimize, BenchDocument, BenchOptions, ConfigFile,
    LoadedConfig, MetaConfig, MetaField, MetaParam, Report, ReportFormat, RunDocument, SelfOptDocument,
};
use asa_core::sampling::{estimate_with, write_samples_csv};
use asa_core::{run, Algorithm, AsaError, ScheduleParams};

/// Quenching factor used by `sample` unless one is configured; below 1 the
/// schedule cools more slowly than annealing requires, which spreads the samples.
const SAMPLE_QUENCH: f64 = 0.5;

#[derive(Parser)]
#[command(name = "asa", version, about = "Adaptive simulated annealing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization.
    Run(Common),
    /// Run many seeds and report generated-states-to-target statistics.
    Bench(BenchArgs),
    /// Run with sampling enabled and write the generated-state log.
    Sample(Common),
    /// Tune schedule settings with an outer annealing run.
    Selfopt(SelfoptArgs),
    /// Print schedule temperatures and generating-probability partial sums.
    Diag(DiagArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog problem (corana, shubert, sphere); replaces the configured problem.
    #[arg(long)]
    problem: Option<String>,
    /// Dimension for catalog problems that take one.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Seed list: `N..M` (M excluded), `N..=M`, or `a,b,c`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    max_generated: Option<u64>,
    /// Quenching factor for every parameter schedule.
    #[arg(long)]
    quench: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    target: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json or csv.
    #[arg(long)]
    format: Option<String>,
    /// Also write the best-update trace as CSV to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Concurrent runs; defaults to the number of CPUs.
    #[arg(long)]
    workers: Option<usize>,
    /// Start every seed from the configured initial point instead of a random one.
    #[arg(long)]
    fixed_start: bool,
    /// Record wall-clock time per seed.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct SelfoptArgs {
    #[command(flatten)]
    common: Common,
    /// Outer generated states.
    #[arg(long)]
    budget: Option<u64>,
    /// Generated-state budget of each inner run.
    #[arg(long)]
    inner_budget: Option<u64>,
    /// Comma-separated fields to tune: m, n, quench, every.
    #[arg(long)]
    tune: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct DiagArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1.0)]
    t0: f64,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    n: Option<f64>,
    /// Decades of annealing index to tabulate.
    #[arg(long, default_value_t = 6)]
    decades: u32,
    /// Horizons for the partial sums.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1_000u64, 1_000_000])]
    horizons: Vec<u64>,
}

/// Failure with its exit status.
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<AsaError> for Failure {
    fn from(e: AsaError) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(c) => cmd_run(&c, false),
        Command::Sample(c) => cmd_run(&c, true),
        Command::Bench(b) => cmd_bench(&b),
        Command::Selfopt(s) => cmd_selfopt(&s),
        Command::Diag(d) => cmd_diag(&d),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure::Config(format!("cannot parse seed list `{text}`; use N..M, N..=M or a,b,c"));
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = text.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        text.split(',').map(num).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

/// Configuration file (if any) plus command-line overrides.
fn load(c: &Common) -> Result<(ConfigFile, LoadedConfig), Failure> {
    let mut file = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            ConfigFile::parse(&text)?
        }
        None if c.problem.is_some() => ConfigFile::default(),
        None => return Err(Failure::Config("give --config or --problem".into())),
    };
    if let Some(name) = &c.problem {
        file.problem = Some(ProblemSection {
            name: Some(name.clone()),
            dim: c.dim,
            ..ProblemSection::default()
        });
    } else if let (Some(d), Some(p)) = (c.dim, file.problem.as_mut()) {
        p.dim = Some(d);
    }
    let mut loaded = file.resolve(None)?;
    let run = &mut loaded.run;
    if let Some(a) = &c.algorithm {
        run.algorithm = a.parse::<Algorithm>()?;
    }
    if let Some(s) = c.seed {
        run.seed = s;
    }
    if let Some(m) = c.max_generated {
        run.termination.max_generated = m;
    }
    if let Some(q) = c.quench {
        run.schedule.quench = q;
        for s in run.parameter_schedules.values_mut() {
            s.quench = q;
        }
    }
    if let Some(t) = c.target {
        run.termination.target_cost = Some(t + c.tol.unwrap_or(0.0));
    }
    run.validate()?;
    Ok((file, loaded))
}

fn format_of(c: &Common, default: ReportFormat) -> Result<ReportFormat, Failure> {
    match &c.format {
        Some(f) => Ok(f.parse()?),
        None => Ok(default),
    }
}

fn with_output<F>(path: Option<&Path>, write: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> asa_core::Result<()>,
{
    let result = match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            write(&mut w).and_then(|_| w.flush().map_err(AsaError::from))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)
        }
    };
    result.map_err(|e| Failure::Runtime(e.to_string()))
}

fn emit<R: Report>(doc: &R, format: ReportFormat, path: Option<&Path>) -> Result<(), Failure> {
    with_output(path, |w| emit_report(doc, format, w))
}

fn cmd_run(c: &Common, sampling: bool) -> Outcome {
    let (file, mut loaded) = load(c)?;
    if sampling {
        loaded.run.sampling = true;
        if c.quench.is_none() && file.schedule.quench.is_none() {
            loaded.run.schedule.quench = SAMPLE_QUENCH;
        }
        loaded.run.validate()?;
    }
    let report = run(&loaded.problem, &loaded.run)?;
    let names: Vec<String> = loaded.problem.parameters.iter().map(|p| p.name.clone()).collect();
    eprintln!(
        "best cost {:e} after {} generated states ({:?})",
        report.best_cost, report.counters.generated, report.termination
    );
    if let Some(path) = &c.trace {
        with_output(Some(path), |w| {
            asa_core::harness::report::write_trace_csv(&report.trace, w)
        })?;
    }
    let reached = match loaded.run.termination.target_cost {
        Some(_) => report.generated_at_target.is_some(),
        None => true,
    };
    if sampling {
        if let Ok(e) = estimate_with(&report.samples, |r| r.cost) {
            eprintln!(
                "{} samples; uniform-measure mean cost {} ± {} (effective sample size {:.1})",
                report.samples.len(),
                e.value,
                e.std_error,
                e.effective_sample_size
            );
        }
        if format_of(c, ReportFormat::Csv)? == ReportFormat::Csv {
            with_output(c.out.as_deref(), |w| write_samples_csv(&report.samples, &names, w))?;
            return Ok(reached);
        }
    }
    let doc = RunDocument {
        problem: loaded.problem_name,
        parameter_names: names,
        config: loaded.run,
        report,
    };
    emit(&doc, format_of(c, ReportFormat::Json)?, c.out.as_deref())?;
    Ok(reached)
}

/// Target and tolerance from the flags, falling back to the catalog entry.
fn target_of(c: &Common, loaded: &LoadedConfig) -> Result<(f64, f64), Failure> {
    let known = loaded.benchmark.as_ref();
    let target = c
        .target
        .or(known.map(|b| b.global_minimum))
        .ok_or_else(|| Failure::Config("no target: give --target for a custom problem".into()))?;
    let tol = c.tol.or(known.map(|b| b.tolerance)).unwrap_or(0.0);
    Ok((target, tol))
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn cmd_bench(b: &BenchArgs) -> Outcome {
    let c = &b.common;
    let (_, mut loaded) = load(c)?;
    let (target, tol) = target_of(c, &loaded)?;
    // The target passed to each run is set by bench itself.
    loaded.run.termination.target_cost = None;
    let seeds = parse_seeds(c.seeds.as_deref().unwrap_or("0..100"))?;
    let options = BenchOptions {
        workers: b.workers.unwrap_or_else(default_workers),
        random_initial: !b.fixed_start,
        timing: b.timing,
        stop_on_stall: false,
    };
    let summary = bench(&loaded.problem, &loaded.run, &seeds, target, tol, &options)?;
    match &summary.generated_to_target {
        Some(a) => eprintln!(
            "{}/{} seeds reached {} ± {}: generated states mean {:.1}, std {:.1}, min {}, max {}",
            summary.successes,
            seeds.len(),
            target,
            tol,
            a.mean,
            a.std,
            a.min,
            a.max
        ),
        None => eprintln!("no seed reached {target} ± {tol}"),
    }
    let failed = summary.failed;
    let doc = BenchDocument {
        problem: loaded.problem_name,
        config: loaded.run,
        seeds,
        summary,
    };
    emit(&doc, format_of(c, ReportFormat::Json)?, c.out.as_deref())?;
    Ok(!failed)
}

fn cmd_selfopt(s: &SelfoptArgs) -> Outcome {
    let c = &s.common;
    let (_, loaded) = load(c)?;
    let mut meta = loaded.meta.clone().unwrap_or_else(|| MetaConfig {
        inner_budget: loaded.run.termination.max_generated,
        ..MetaConfig::default()
    });
    if let Some(v) = s.budget {
        meta.budget = v;
    }
    if let Some(v) = s.inner_budget {
        meta.inner_budget = v;
    }
    if let Some(list) = &s.tune {
        meta.tune = list
            .split(',')
            .map(|f| Ok(MetaParam::default_for(f.trim().parse::<MetaField>()?)))
            .collect::<Result<_, AsaError>>()?;
    }
    if let Some(seeds) = &c.seeds {
        meta.seeds = parse_seeds(seeds)?;
    }
    meta.workers = s.workers.unwrap_or(meta.workers);
    if meta.target.is_none() || c.target.is_some() {
        if let Ok((t, tol)) = target_of(c, &loaded) {
            meta.target = Some(t + tol);
        }
    }
    let mut base = loaded.run.clone();
    base.termination.target_cost = None;
    let report = self_optimize(&meta, &loaded.problem, &base)?;
    let cost = |c: Option<f64>| c.map_or("n/a".to_string(), |c| format!("{c:e}"));
    let tuned: Vec<String> = report
        .fields
        .iter()
        .zip(&report.tuned_values)
        .map(|(f, v)| format!("{f} = {v}"))
        .collect();
    eprintln!(
        "{} meta-evaluations; meta cost {} with defaults, {} tuned ({})",
        report.evaluations,
        cost(report.default_cost),
        cost(report.tuned_cost),
        tuned.join(", ")
    );
    let doc = SelfOptDocument {
        problem: loaded.problem_name,
        meta,
        report,
    };
    emit(&doc, format_of(c, ReportFormat::Json)?, c.out.as_deref())?;
    Ok(true)
}

fn cmd_diag(d: &DiagArgs) -> Outcome {
    let c = &d.common;
    let (schedule, dim) = if c.config.is_some() || c.problem.is_some() {
        let (_, l) = load(c)?;
        (l.run.schedule, l.problem.effective_dim().max(1))
    } else {
        let mut s = asa_core::ScaleSettings::default();
        if let Some(q) = c.quench {
            s.quench = q;
        }
        (s, c.dim.unwrap_or(1))
    };
    let params = ScheduleParams::new(
        d.t0,
        d.m.unwrap_or(schedule.m),
        d.n.unwrap_or(schedule.n),
        schedule.quench,
        c.dim.unwrap_or(dim),
    )?;
    let report = schedule_diagnostics(&params, &decade_indices(d.decades), &d.horizons)?;
    emit(&report, format_of(c, ReportFormat::Json)?, c.out.as_deref())?;
    Ok(true)
}
