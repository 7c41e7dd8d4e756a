//! Configuration files, multi-seed benchmarking, self-optimization and report output.

pub mod bench;
pub mod config;
pub mod diag;
pub mod report;
pub mod selfopt;

pub use bench::{bench, random_initial_point, Aggregate, BenchOptions, BenchSummary, SeedResult};
pub use config::{parse_config, ConfigFile, LoadedConfig};
pub use diag::{decade_indices, schedule_diagnostics, DiagReport};
pub use report::{emit_report, from_json, to_json, BenchDocument, Report, ReportFormat, RunDocument, SelfOptDocument};
pub use selfopt::{meta_cost, self_optimize, MetaConfig, MetaField, MetaObjective, MetaParam, SelfOptReport};

/// A float with 17 significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}
