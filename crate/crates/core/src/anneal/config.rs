use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distributions::{AcceptanceForm, CauchyMode};
use crate::error::{AsaError, Result};
use crate::schedules::{default_m, default_n};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Adaptive simulated annealing.
    #[default]
    Asa,
    /// Boltzmann annealing: Gaussian steps, logarithmic schedule.
    Ba,
    /// Fast annealing: Cauchy steps, reciprocal schedule.
    Fa,
}

impl std::str::FromStr for Algorithm {
    type Err = AsaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "asa" => Ok(Algorithm::Asa),
            "ba" => Ok(Algorithm::Ba),
            "fa" => Ok(Algorithm::Fa),
            _ => Err(AsaError::UnknownAlgorithm(s.to_string())),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Asa => "asa",
            Algorithm::Ba => "ba",
            Algorithm::Fa => "fa",
        })
    }
}

/// The tunable part of a schedule: `m`, `n` and the quenching factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSettings {
    pub m: f64,
    pub n: f64,
    pub quench: f64,
}

impl Default for ScaleSettings {
    fn default() -> Self {
        ScaleSettings {
            m: default_m(),
            n: default_n(),
            quench: 1.0,
        }
    }
}

impl ScaleSettings {
    pub fn validate(&self, what: &str) -> Result<()> {
        let ok = self.m.is_finite()
            && self.m > 0.0
            && self.n.is_finite()
            && self.n >= 0.0
            && self.quench.is_finite()
            && self.quench > 0.0;
        if ok {
            Ok(())
        } else {
            Err(AsaError::InvalidConfig(format!(
                "{what} schedule needs m > 0, n >= 0, quench > 0 (got {self:?})"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GenerationMode {
    /// Every non-fixed coordinate moves in each candidate.
    #[default]
    AllCoordinates,
    /// One coordinate per candidate, round-robin.
    SequentialCoordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ReannealTrigger {
    #[default]
    Accepted,
    Generated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReannealConfig {
    pub enabled: bool,
    /// Reanneal cadence: every this many events of `trigger` kind.
    pub every: u64,
    pub trigger: ReannealTrigger,
}

impl Default for ReannealConfig {
    fn default() -> Self {
        ReannealConfig {
            enabled: true,
            every: 100,
            trigger: ReannealTrigger::Accepted,
        }
    }
}

/// Stop when the best cost improves by at most `epsilon` (relative) for
/// `cycles` consecutive reanneal cycles. `cycles == 0` disables the rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StallRule {
    pub epsilon: f64,
    pub cycles: u32,
}

impl Default for StallRule {
    fn default() -> Self {
        StallRule {
            epsilon: 1e-10,
            cycles: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub max_generated: u64,
    /// Stop as soon as any evaluated cost is at or below this value.
    #[serde(with = "crate::harness::report::lossless::option")]
    pub target_cost: Option<f64>,
    pub stall: StallRule,
}

impl Default for Termination {
    fn default() -> Self {
        Termination {
            max_generated: 100_000,
            target_cost: None,
            stall: StallRule::default(),
        }
    }
}

/// Batch candidate generation: `size` candidates are drawn from frozen
/// temperatures, costed on up to `workers` threads, then accepted in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub size: usize,
    pub workers: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig { size: 1, workers: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    /// Schedule scales shared by every parameter unless overridden by name.
    pub schedule: ScaleSettings,
    pub parameter_schedules: BTreeMap<String, ScaleSettings>,
    pub acceptance_schedule: ScaleSettings,
    pub acceptance_form: AcceptanceForm,
    pub generation: GenerationMode,
    pub cauchy_mode: CauchyMode,
    pub reanneal: ReannealConfig,
    /// Finite-difference step relative to each parameter's range width.
    pub fd_step: f64,
    pub termination: Termination,
    pub seed: u64,
    pub batch: BatchConfig,
    /// Record a [`crate::sampling::SampleRecord`] for every evaluated candidate.
    pub sampling: bool,
    /// Keep every temperature at its initial value.
    pub frozen: bool,
    /// Record a trace row at every best-cost update.
    pub trace: bool,
    /// Starting index of the logarithmic Boltzmann schedule.
    pub ba_k0: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algorithm: Algorithm::Asa,
            schedule: ScaleSettings::default(),
            parameter_schedules: BTreeMap::new(),
            acceptance_schedule: ScaleSettings::default(),
            acceptance_form: AcceptanceForm::MetropolisExp,
            generation: GenerationMode::AllCoordinates,
            cauchy_mode: CauchyMode::Product,
            reanneal: ReannealConfig::default(),
            fd_step: 1e-5,
            termination: Termination::default(),
            seed: 0,
            batch: BatchConfig::default(),
            sampling: false,
            frozen: false,
            trace: true,
            ba_k0: std::f64::consts::E,
        }
    }
}

impl RunConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn with_max_generated(mut self, max_generated: u64) -> Self {
        self.termination.max_generated = max_generated;
        self
    }

    pub fn with_target(mut self, target: Option<f64>) -> Self {
        self.termination.target_cost = target;
        self
    }

    pub fn with_quench(mut self, quench: f64) -> Self {
        self.schedule.quench = quench;
        self
    }

    pub fn scales_for(&self, name: &str) -> ScaleSettings {
        self.parameter_schedules.get(name).copied().unwrap_or(self.schedule)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate("parameter")?;
        for (name, s) in &self.parameter_schedules {
            s.validate(&format!("parameter `{name}`"))?;
        }
        self.acceptance_schedule.validate("acceptance")?;
        self.acceptance_form
            .validate()
            .map_err(|e| AsaError::InvalidConfig(e.to_string()))?;
        if self.reanneal.every == 0 {
            return Err(AsaError::InvalidConfig("reanneal cadence must be at least 1".into()));
        }
        if self.termination.max_generated == 0 {
            return Err(AsaError::InvalidConfig("max_generated must be at least 1".into()));
        }
        if !(self.fd_step.is_finite() && self.fd_step > 0.0) {
            return Err(AsaError::InvalidConfig(format!(
                "finite-difference step must be positive, got {}",
                self.fd_step
            )));
        }
        if !(self.termination.stall.epsilon >= 0.0) {
            return Err(AsaError::InvalidConfig("stall epsilon must be non-negative".into()));
        }
        if self.batch.size == 0 || self.batch.workers == 0 {
            return Err(AsaError::InvalidConfig(
                "batch size and worker count must be at least 1".into(),
            ));
        }
        if self.algorithm == Algorithm::Ba && !(self.ba_k0 >= 2.0) {
            return Err(AsaError::InvalidConfig(format!(
                "ba_k0 must be at least 2, got {}",
                self.ba_k0
            )));
        }
        if self.sampling && self.algorithm != Algorithm::Asa {
            return Err(AsaError::InvalidConfig(
                "sampling mode records ASA generating densities and requires algorithm = asa".into(),
            ));
        }
        Ok(())
    }
}
