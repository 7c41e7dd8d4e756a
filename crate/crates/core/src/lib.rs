//! Adaptive simulated annealing (ASA) with reannealing and quenching, with
//! Boltzmann and fast-annealing baselines, benchmark functions, an
//! importance-sampling mode and a multi-seed benchmark harness.
//!
//! ```
//! use asa_core::{run, testfns, RunConfig};
//!
//! let problem = testfns::sphere_problem(2);
//! let report = run(&problem, &RunConfig::default().with_seed(3).with_max_generated(5_000)).unwrap();
//! assert!(report.best_cost < 1e-3);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anneal;
pub mod distributions;
pub mod error;
pub mod harness;
pub mod problem;
pub mod reanneal;
pub mod sampling;
pub mod schedules;
pub mod testfns;

pub use anneal::{
    curvature_diagnostics, run, Algorithm, AnnealerState, Candidate, Counters, CurvatureReport, Decision,
    GenerationMode, RunConfig, RunReport, ScaleSettings, TerminationReason, TraceRow,
};
pub use distributions::{AcceptanceForm, CauchyMode};
pub use error::{AsaError, Result};
pub use problem::{ParamKind, ParameterSpec, ProblemSpec};
pub use schedules::{AnnealIndex, ScheduleParams};
