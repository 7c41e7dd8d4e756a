//! The annealing state machine.
//!
//! A run alternates two steps. [`AnnealerState::generate_candidate`] perturbs
//! the current point coordinate by coordinate, redrawing any coordinate that
//! leaves its range, and evaluates the cost unless the feasibility predicate
//! rejects the point first. [`AnnealerState::accept_step`] applies the
//! acceptance test and advances counters and temperatures. Parameter
//! temperatures follow the generated count; the acceptance temperature follows
//! the accepted count. Every `reanneal.every` events the ASA engine rescales
//! both from cost sensitivities at the best point (see [`crate::reanneal`]).

mod config;
mod curvature;

pub use config::{
    Algorithm, BatchConfig, GenerationMode, ReannealConfig, ReannealTrigger, RunConfig, ScaleSettings, StallRule,
    Termination,
};
pub use curvature::{curvature_diagnostics, CurvatureReport};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    acceptance_unchecked, asa_cdf_unchecked, asa_density_1d, asa_draw_unchecked, boltzmann_step, cauchy_step,
    isotropic_cauchy, CauchyMode,
};
use crate::error::{domain, AsaError, Result};
use crate::problem::{round_ties_toward_zero, ParamKind, ProblemSpec};
use crate::reanneal;
use crate::sampling::{record_sample, SampleRecord};
use crate::schedules::{asa_temperature_raw, ScheduleParams, TEMPERATURE_FLOOR};

/// Floor for the initial acceptance temperature when the starting cost is zero.
pub const ACCEPT_TEMPERATURE_FLOOR: f64 = 1e-18;
/// Redraws of one out-of-range coordinate before it is clamped to the nearest bound.
pub const MAX_REDRAWS: u32 = 1000;
/// A run gives up after this many consecutive infeasible candidates.
pub const MAX_CONSECUTIVE_INFEASIBLE: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counters {
    /// Cost evaluations of candidates, including the initial point.
    pub generated: u64,
    /// Accepted states, including the initial point.
    pub accepted: u64,
    pub rejected: u64,
    /// Candidates discarded by the feasibility predicate; never costed.
    pub infeasible: u64,
    pub best_updates: u64,
    pub reanneals: u64,
    pub redraw_cap_hits: u64,
    pub nonfinite_costs: u64,
    /// Cost evaluations spent on sensitivity probes; not part of `generated`.
    pub probe_evaluations: u64,
    pub sensitivity_failures: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub point: Vec<f64>,
    /// Relative steps `y` (ASA) or raw normalized steps (BA/FA); zero for unmoved coordinates.
    pub steps: Vec<f64>,
    /// `NaN` until evaluated.
    pub cost: f64,
    pub feasible: bool,
    /// Some coordinate hit the redraw cap and was clamped.
    pub clamped: bool,
    /// Generating density in parameter coordinates (sampling mode only).
    pub density: Option<f64>,
    /// Probability mass of the untruncated step density that lands in range.
    pub range_mass: Option<f64>,
    pub attempt: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationReason {
    TargetReached,
    MaxGenerated,
    Stalled,
    InfeasibleLimit,
}

/// One row per best-cost update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub generated: u64,
    pub accepted: u64,
    pub best_cost: f64,
    pub current_cost: f64,
    pub t_accept: f64,
    pub max_param_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub best_point: Vec<f64>,
    pub best_cost: f64,
    pub final_point: Vec<f64>,
    pub final_cost: f64,
    pub counters: Counters,
    /// Generated count at which the target cost was first attained.
    pub generated_at_target: Option<u64>,
    pub termination: TerminationReason,
    pub final_temperatures: Vec<f64>,
    pub final_accept_temperature: f64,
    #[serde(default)]
    pub trace: Vec<TraceRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<SampleRecord>,
}

#[derive(Debug, Clone)]
pub struct AnnealerState {
    pub current: Vec<f64>,
    pub current_cost: f64,
    pub best: Vec<f64>,
    pub best_cost: f64,
    /// Cost of the most recently evaluated candidate.
    pub last_cost: f64,
    pub temperatures: Vec<f64>,
    pub indices: Vec<f64>,
    pub param_schedules: Vec<ScheduleParams>,
    pub accept_temperature: f64,
    pub accept_index: f64,
    /// Acceptance schedule; its `t0` is the current initial acceptance temperature.
    pub accept_schedule: ScheduleParams,
    pub counters: Counters,
    pub generated_at_target: Option<u64>,
    pub trace: Vec<TraceRow>,
    pub samples: Vec<SampleRecord>,
    algorithm: Algorithm,
    ba_k0: f64,
    frozen: bool,
    free: Vec<usize>,
    rng: ChaCha8Rng,
    seed: u64,
    attempts: u64,
    next_coord: usize,
    cycle_best: f64,
    stall_count: u32,
    consecutive_infeasible: u64,
}

impl AnnealerState {
    /// Validates inputs, evaluates the initial point and sets all parameter temperatures to 1.
    pub fn init(problem: &ProblemSpec, config: &RunConfig) -> Result<Self> {
        problem.validate()?;
        config.validate()?;
        for name in config.parameter_schedules.keys() {
            if !problem.parameters.iter().any(|p| &p.name == name) {
                return Err(AsaError::InvalidConfig(format!(
                    "schedule override names unknown parameter `{name}`"
                )));
            }
        }
        let point = problem.initial_point();
        if !problem.is_feasible(&point) {
            return Err(AsaError::InfeasibleStart(format!("{point:?}")));
        }
        let cost = problem
            .cost(&point)
            .map_err(|message| AsaError::Cost { generated: 0, message })?;
        if !cost.is_finite() {
            return Err(AsaError::NonFiniteInitialCost(cost));
        }

        let d_eff = problem.effective_dim().max(1);
        let param_schedules = problem
            .parameters
            .iter()
            .map(|p| {
                let s = config.scales_for(&p.name);
                ScheduleParams::new(1.0, s.m, s.n, s.quench, d_eff)
            })
            .collect::<Result<Vec<_>>>()?;
        let a = config.acceptance_schedule;
        let t_a0 = cost.abs().max(ACCEPT_TEMPERATURE_FLOOR);
        let accept_schedule = ScheduleParams::new(t_a0, a.m, a.n, a.quench, d_eff)?;
        let free = (0..problem.dim())
            .filter(|&i| !problem.parameters[i].is_fixed())
            .collect();

        let mut state = AnnealerState {
            current: point.clone(),
            current_cost: cost,
            best: point,
            best_cost: cost,
            last_cost: cost,
            temperatures: vec![1.0; problem.dim()],
            indices: vec![0.0; problem.dim()],
            param_schedules,
            accept_temperature: t_a0,
            accept_index: 0.0,
            accept_schedule,
            counters: Counters {
                generated: 1,
                accepted: 1,
                ..Counters::default()
            },
            generated_at_target: None,
            trace: Vec::new(),
            samples: Vec::new(),
            algorithm: config.algorithm,
            ba_k0: config.ba_k0,
            frozen: config.frozen,
            free,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            seed: config.seed,
            attempts: 0,
            next_coord: 0,
            cycle_best: cost,
            stall_count: 0,
            consecutive_infeasible: 0,
        };
        if config.termination.target_cost.is_some_and(|t| cost <= t) {
            state.generated_at_target = Some(1);
        }
        if config.trace {
            state.push_trace();
        }
        Ok(state)
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        !self.free.contains(&i)
    }

    /// Temperature of parameter `i` implied by its current index.
    pub fn parameter_temperature_at(&self, i: usize, k: f64) -> f64 {
        let p = &self.param_schedules[i];
        self.schedule_temperature(k, p.t0, p)
    }

    /// Acceptance temperature implied by an acceptance index.
    pub fn acceptance_temperature_at(&self, k: f64) -> f64 {
        self.schedule_temperature(k, self.accept_schedule.t0, &self.accept_schedule)
    }

    fn schedule_temperature(&self, k: f64, t0: f64, p: &ScheduleParams) -> f64 {
        match self.algorithm {
            Algorithm::Asa => asa_temperature_raw(k, t0, p.scale(), p.exponent()),
            Algorithm::Ba => (t0 * self.ba_k0.ln() / (k + self.ba_k0).ln()).max(TEMPERATURE_FLOOR),
            Algorithm::Fa => (t0 / (k + 1.0)).max(TEMPERATURE_FLOOR),
        }
    }

    fn candidate_rng(&self, attempt: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(attempt.wrapping_add(1));
        rng
    }

    /// Draws a candidate and checks feasibility, without costing it or touching counters.
    fn propose(&mut self, problem: &ProblemSpec, config: &RunConfig) -> Candidate {
        let attempt = self.attempts;
        self.attempts += 1;
        let mut crng = self.candidate_rng(attempt);

        let coords: Vec<usize> = match config.generation {
            GenerationMode::AllCoordinates => self.free.clone(),
            GenerationMode::SequentialCoordinate => {
                if self.free.is_empty() {
                    Vec::new()
                } else {
                    let i = self.free[self.next_coord % self.free.len()];
                    self.next_coord += 1;
                    vec![i]
                }
            }
        };

        let mut point = self.current.clone();
        let mut steps = vec![0.0; point.len()];
        let mut clamped = false;
        let want_density = config.sampling && self.algorithm == Algorithm::Asa;
        let mut density = 1.0;
        let mut range_mass = 1.0;

        let isotropic = self.algorithm == Algorithm::Fa && config.cauchy_mode == CauchyMode::Isotropic;
        // Unit-scale vector; each coordinate scales its component by its own temperature.
        let iso_first: Vec<f64> = if isotropic {
            isotropic_cauchy(&mut crng, 1.0, coords.len().max(1))
        } else {
            Vec::new()
        };

        for (slot, &i) in coords.iter().enumerate() {
            let spec = &problem.parameters[i];
            let width = spec.width();
            let (lo, hi) = spec.admissible_bounds();
            let origin = self.current[i];
            let t = self.temperatures[i];
            let mut placed = None;
            let mut last = origin;
            for attempt_no in 0..MAX_REDRAWS {
                let step = match self.algorithm {
                    Algorithm::Asa => asa_draw_unchecked(crng.random::<f64>(), t),
                    Algorithm::Ba => boltzmann_step(&mut crng, t),
                    // Out-of-range coordinates take their component from a fresh vector.
                    Algorithm::Fa if isotropic && attempt_no == 0 => iso_first[slot] * t,
                    Algorithm::Fa if isotropic => isotropic_cauchy(&mut crng, 1.0, coords.len())[slot] * t,
                    Algorithm::Fa => cauchy_step(&mut crng, t),
                };
                let mut x = origin + step * width;
                if spec.kind == ParamKind::Integer {
                    x = round_ties_toward_zero(x);
                }
                last = x;
                if x >= lo && x <= hi {
                    placed = Some((x, step));
                    break;
                }
            }
            let (x, step) = placed.unwrap_or_else(|| {
                clamped = true;
                (last.clamp(lo, hi), (last.clamp(lo, hi) - origin) / width)
            });
            point[i] = x;
            steps[i] = step;
            if want_density {
                let (g, z) = coordinate_density(spec.kind, origin, x, step, t, lo, hi, width);
                density *= g;
                range_mass *= z;
            }
        }

        let feasible = !problem.has_feasibility() || problem.is_feasible(&point);
        Candidate {
            point,
            steps,
            cost: f64::NAN,
            feasible,
            clamped,
            density: want_density.then_some(density),
            range_mass: want_density.then_some(range_mass),
            attempt,
        }
    }

    fn note_infeasible(&mut self) {
        self.counters.infeasible += 1;
        self.consecutive_infeasible += 1;
    }

    /// Draws, feasibility-checks and (if feasible) costs one candidate.
    pub fn generate_candidate(&mut self, problem: &ProblemSpec, config: &RunConfig) -> Result<Candidate> {
        let mut cand = self.propose(problem, config);
        if cand.clamped {
            self.counters.redraw_cap_hits += 1;
        }
        if !cand.feasible {
            self.note_infeasible();
            return Ok(cand);
        }
        cand.cost = problem.cost(&cand.point).map_err(|message| AsaError::Cost {
            generated: self.counters.generated,
            message,
        })?;
        Ok(cand)
    }

    /// Applies the acceptance test to a costed, feasible candidate and advances the schedules.
    pub fn accept_step(&mut self, cand: Candidate, config: &RunConfig) -> Result<Decision> {
        if !cand.feasible {
            return Err(domain("accept_step called with an infeasible candidate"));
        }
        self.consecutive_infeasible = 0;
        let u: f64 = self.rng.random();
        let finite = cand.cost.is_finite();
        let p_accept = if finite {
            acceptance_unchecked(
                cand.cost - self.current_cost,
                self.accept_temperature,
                config.acceptance_form,
            )
        } else {
            self.counters.nonfinite_costs += 1;
            0.0
        };
        let decision = if finite && u < p_accept {
            Decision::Accepted
        } else {
            Decision::Rejected
        };

        self.counters.generated += 1;
        if finite {
            self.last_cost = cand.cost;
        }
        let improved = finite && cand.cost < self.best_cost;
        if improved {
            self.best.clone_from(&cand.point);
            self.best_cost = cand.cost;
            self.counters.best_updates += 1;
            if self.generated_at_target.is_none() && config.termination.target_cost.is_some_and(|t| cand.cost <= t) {
                self.generated_at_target = Some(self.counters.generated);
            }
        }

        if config.sampling {
            self.samples.push(record_sample(
                self.counters.generated,
                &cand,
                p_accept,
                decision == Decision::Accepted,
            ));
        }

        match decision {
            Decision::Accepted => {
                self.current = cand.point;
                self.current_cost = cand.cost;
                self.counters.accepted += 1;
                if !self.frozen {
                    self.accept_index += 1.0;
                    self.accept_temperature = self.acceptance_temperature_at(self.accept_index);
                }
            }
            Decision::Rejected => self.counters.rejected += 1,
        }
        if !self.frozen {
            for idx in 0..self.free.len() {
                let i = self.free[idx];
                self.indices[i] += 1.0;
                self.temperatures[i] = self.parameter_temperature_at(i, self.indices[i]);
            }
        }
        if improved && config.trace {
            self.push_trace();
        }
        Ok(decision)
    }

    fn push_trace(&mut self) {
        let max_param_t = self.free.iter().map(|&i| self.temperatures[i]).fold(0.0, f64::max);
        self.trace.push(TraceRow {
            generated: self.counters.generated,
            accepted: self.counters.accepted,
            best_cost: self.best_cost,
            current_cost: self.current_cost,
            t_accept: self.accept_temperature,
            max_param_t,
        });
    }

    /// Reanneal and stall bookkeeping after one acceptance test.
    fn after_step(&mut self, problem: &ProblemSpec, config: &RunConfig, decision: Decision) -> Result<()> {
        let every = config.reanneal.every;
        let boundary = match config.reanneal.trigger {
            ReannealTrigger::Accepted => decision == Decision::Accepted && self.counters.accepted.is_multiple_of(every),
            ReannealTrigger::Generated => self.counters.generated.is_multiple_of(every),
        };
        if !boundary {
            return Ok(());
        }
        if self.algorithm == Algorithm::Asa && config.reanneal.enabled && !self.frozen {
            reanneal::reanneal_cycle(self, problem, config)?;
        }
        let stall = config.termination.stall;
        let scale = self.cycle_best.abs().max(f64::MIN_POSITIVE);
        if self.cycle_best - self.best_cost <= stall.epsilon * scale {
            self.stall_count += 1;
        } else {
            self.stall_count = 0;
        }
        self.cycle_best = self.best_cost;
        Ok(())
    }

    pub fn termination(&self, config: &RunConfig) -> Option<TerminationReason> {
        if self.generated_at_target.is_some() {
            Some(TerminationReason::TargetReached)
        } else if self.counters.generated >= config.termination.max_generated {
            Some(TerminationReason::MaxGenerated)
        } else if config.termination.stall.cycles > 0 && self.stall_count >= config.termination.stall.cycles {
            Some(TerminationReason::Stalled)
        } else if self.consecutive_infeasible >= MAX_CONSECUTIVE_INFEASIBLE {
            Some(TerminationReason::InfeasibleLimit)
        } else {
            None
        }
    }

    pub fn into_report(self, termination: TerminationReason) -> RunReport {
        RunReport {
            algorithm: self.algorithm,
            seed: self.seed,
            best_point: self.best,
            best_cost: self.best_cost,
            final_point: self.current,
            final_cost: self.current_cost,
            counters: self.counters,
            generated_at_target: self.generated_at_target,
            termination,
            final_temperatures: self.temperatures,
            final_accept_temperature: self.accept_temperature,
            trace: self.trace,
            samples: self.samples,
        }
    }
}

/// Truncated generating density of one ASA coordinate in parameter units,
/// together with the in-range mass of the untruncated density.
#[allow(clippy::too_many_arguments)]
fn coordinate_density(
    kind: ParamKind,
    origin: f64,
    x: f64,
    step: f64,
    t: f64,
    lo: f64,
    hi: f64,
    width: f64,
) -> (f64, f64) {
    let rel = |v: f64| ((v - origin) / width).clamp(-1.0, 1.0);
    match kind {
        ParamKind::Real => {
            let z = asa_cdf_unchecked(rel(hi), t) - asa_cdf_unchecked(rel(lo), t);
            let g = asa_density_1d(step, t) / width;
            (g / z, z)
        }
        ParamKind::Integer => {
            let z = asa_cdf_unchecked(rel(hi + 0.5), t) - asa_cdf_unchecked(rel(lo - 0.5), t);
            let cell = asa_cdf_unchecked(rel(x + 0.5), t) - asa_cdf_unchecked(rel(x - 0.5), t);
            (cell / z, z)
        }
    }
}

/// Runs one optimization to termination.
pub fn run(problem: &ProblemSpec, config: &RunConfig) -> Result<RunReport> {
    let mut state = AnnealerState::init(problem, config)?;
    let batch = config.batch.size;
    let pool = if batch > 1 && config.batch.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.batch.workers)
                .build()
                .map_err(|e| AsaError::InvalidConfig(format!("worker pool: {e}")))?,
        )
    } else {
        None
    };

    let reason = loop {
        if let Some(reason) = state.termination(config) {
            break reason;
        }
        let mut candidates: Vec<Candidate> = (0..batch).map(|_| state.propose(problem, config)).collect();
        let costs: Vec<Option<std::result::Result<f64, String>>> = match &pool {
            Some(pool) => pool.install(|| {
                candidates
                    .par_iter()
                    .map(|c| c.feasible.then(|| problem.cost(&c.point)))
                    .collect()
            }),
            None => candidates
                .iter()
                .map(|c| c.feasible.then(|| problem.cost(&c.point)))
                .collect(),
        };

        for (mut cand, cost) in candidates.drain(..).zip(costs) {
            if state.termination(config).is_some() {
                break;
            }
            if cand.clamped {
                state.counters.redraw_cap_hits += 1;
            }
            let Some(cost) = cost else {
                state.note_infeasible();
                continue;
            };
            cand.cost = cost.map_err(|message| AsaError::Cost {
                generated: state.counters.generated,
                message,
            })?;
            let decision = state.accept_step(cand, config)?;
            state.after_step(problem, config, decision)?;
        }
    };
    Ok(state.into_report(reason))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::AcceptanceForm;
    use crate::problem::ParameterSpec;
    use crate::testfns;

    fn sphere(dim: usize, initial: f64) -> ProblemSpec {
        let params = (0..dim)
            .map(|i| ParameterSpec::real(format!("x{i}"), -5.0, 5.0, initial))
            .collect();
        ProblemSpec::new(params, |x| x.iter().map(|v| v * v).sum())
    }

    #[test]
    fn init_sets_unit_temperatures_and_floor() {
        let st = AnnealerState::init(&sphere(3, 0.0), &RunConfig::default()).unwrap();
        assert!(st.temperatures.iter().all(|&t| t == 1.0));
        assert_eq!(st.accept_temperature, ACCEPT_TEMPERATURE_FLOOR);
        assert_eq!(st.counters.generated, 1);
        assert_eq!(st.indices, vec![0.0; 3]);
        assert_eq!(st.accept_index, 0.0);
    }

    #[test]
    fn init_uses_cost_magnitude_for_acceptance_temperature() {
        let st = AnnealerState::init(&sphere(2, 2.0), &RunConfig::default()).unwrap();
        assert_eq!(st.accept_temperature, 8.0);
        assert_eq!(st.accept_schedule.t0, 8.0);
    }

    #[test]
    fn init_rejects_bad_starts() {
        let mut p = sphere(2, 0.0);
        p.parameters[0].initial = 7.0;
        assert!(AnnealerState::init(&p, &RunConfig::default()).is_err());

        let p = sphere(2, 1.0).with_feasibility(|x| x[0] < 0.0);
        assert!(matches!(
            AnnealerState::init(&p, &RunConfig::default()),
            Err(AsaError::InfeasibleStart(_))
        ));

        let p = ProblemSpec::new(vec![ParameterSpec::real("a", 0.0, 1.0, 0.5)], |_| f64::NAN);
        assert!(matches!(
            AnnealerState::init(&p, &RunConfig::default()),
            Err(AsaError::NonFiniteInitialCost(_))
        ));
    }

    #[test]
    fn fixed_parameter_never_moves() {
        let p = ProblemSpec::new(
            vec![
                ParameterSpec::real("a", -1.0, 1.0, 0.3),
                ParameterSpec::real("fixed", 3.0, 3.0, 3.0),
            ],
            |x| x[0] * x[0] + x[1],
        );
        let cfg = RunConfig::default();
        let mut st = AnnealerState::init(&p, &cfg).unwrap();
        assert_eq!(st.param_schedules[0].d_eff, 1);
        for _ in 0..500 {
            let c = st.generate_candidate(&p, &cfg).unwrap();
            assert_eq!(c.point[1], 3.0);
            st.accept_step(c, &cfg).unwrap();
        }
        assert_eq!(st.indices[1], 0.0);
        assert_eq!(st.temperatures[1], 1.0);
    }

    #[test]
    fn integer_parameter_stays_integral() {
        let p = ProblemSpec::new(
            vec![
                ParameterSpec::integer("n", 0.0, 10.0, 5.0),
                ParameterSpec::real("x", -1.0, 1.0, 0.0),
            ],
            |x| (x[0] - 7.0).powi(2) + x[1] * x[1],
        );
        let cfg = RunConfig::default();
        let mut st = AnnealerState::init(&p, &cfg).unwrap();
        for _ in 0..2000 {
            let c = st.generate_candidate(&p, &cfg).unwrap();
            assert!(c.point[0].fract() == 0.0 && (0.0..=10.0).contains(&c.point[0]));
            st.accept_step(c, &cfg).unwrap();
        }
    }

    #[test]
    fn cold_temperatures_keep_candidates_near_current() {
        let p = sphere(3, 1.25);
        let cfg = RunConfig::default();
        let mut st = AnnealerState::init(&p, &cfg).unwrap();
        st.temperatures = vec![TEMPERATURE_FLOOR; 3];
        let mut displacements: Vec<f64> = (0..400)
            .map(|_| {
                let c = st.propose(&p, &cfg);
                c.point
                    .iter()
                    .zip(&st.current)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        displacements.sort_by(f64::total_cmp);
        // Typical steps vanish; only the fat tail escapes.
        assert!(displacements[200] < 1e-12, "median {}", displacements[200]);
    }

    #[test]
    fn sequential_mode_moves_one_coordinate() {
        let p = sphere(3, 1.0);
        let cfg = RunConfig {
            generation: GenerationMode::SequentialCoordinate,
            ..RunConfig::default()
        };
        let mut st = AnnealerState::init(&p, &cfg).unwrap();
        for n in 0..30 {
            let c = st.generate_candidate(&p, &cfg).unwrap();
            let moved: Vec<usize> = (0..3).filter(|&i| c.point[i] != st.current[i]).collect();
            assert!(moved.len() <= 1);
            if let Some(&i) = moved.first() {
                assert_eq!(i, n % 3);
            }
            st.accept_step(c, &cfg).unwrap();
        }
    }

    #[test]
    fn infeasible_candidates_are_not_costed() {
        use std::sync::atomic::{AtomicU64, Ordering};
        use std::sync::Arc;
        let calls = Arc::new(AtomicU64::new(0));
        let c2 = calls.clone();
        let p = ProblemSpec::new(vec![ParameterSpec::real("a", -1.0, 1.0, -0.5)], move |x| {
            c2.fetch_add(1, Ordering::SeqCst);
            x[0] * x[0]
        })
        .with_feasibility(|x| x[0] < 0.0);
        let cfg = RunConfig::default().with_max_generated(300);
        let mut st = AnnealerState::init(&p, &cfg).unwrap();
        let mut infeasible = 0;
        while st.counters.generated < 300 {
            let before = st.indices[0];
            let c = st.generate_candidate(&p, &cfg).unwrap();
            if c.feasible {
                assert!(c.point[0] < 0.0);
                st.accept_step(c, &cfg).unwrap();
            } else {
                infeasible += 1;
                assert!(c.cost.is_nan());
                assert_eq!(st.indices[0], before);
            }
        }
        assert!(infeasible > 0);
        assert_eq!(st.counters.infeasible, infeasible);
        assert_eq!(calls.load(Ordering::SeqCst), 300);
    }

    #[test]
    fn density_at_zero_step_matches_closed_form() {
        // Untruncated density at y = 0 is 1 / (2 T ln(1 + 1/T)) / (B - A).
        for t in [1.0, 0.1, 1e-4] {
            let (g, z) = coordinate_density(ParamKind::Real, 0.5, 0.5, 0.0, t, -1.0, 3.0, 4.0);
            let want = 1.0 / (2.0 * t * (1.0 + 1.0 / t).ln()) / 4.0;
            assert!((g * z - want).abs() <= 1e-12 * want);
            assert!(z > 0.0 && z < 1.0);
        }
    }

    #[test]
    fn integer_cell_masses_sum_to_one() {
        let (lo, hi) = (0.0, 6.0);
        let total: f64 = (0..=6)
            .map(|v| coordinate_density(ParamKind::Integer, 2.0, v as f64, 0.0, 0.3, lo, hi, 6.0).0)
            .sum();
        assert!((total - 1.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn threshold_comparison_rejects_at_half() {
        // dE = T_a gives p = e^{-1} < 0.5
        let p = acceptance_unchecked(2.0, 2.0, AcceptanceForm::MetropolisExp);
        assert!(0.5 >= p);
    }

    #[test]
    fn acceptance_rate_matches_probability() {
        let p = ProblemSpec::new(vec![ParameterSpec::real("a", 0.0, 1.0, 0.0)], |_| 0.0);
        let cfg = RunConfig {
            frozen: true,
            ..RunConfig::default()
        };
        let mut st = AnnealerState::init(&p, &cfg).unwrap();
        st.accept_temperature = 1.0;
        let trials = 100_000;
        let mut accepted = 0;
        for _ in 0..trials {
            let cand = Candidate {
                point: vec![0.0],
                steps: vec![0.0],
                cost: 1.0,
                feasible: true,
                clamped: false,
                density: None,
                range_mass: None,
                attempt: 0,
            };
            st.current_cost = 0.0;
            if st.accept_step(cand, &cfg).unwrap() == Decision::Accepted {
                accepted += 1;
            }
        }
        let rate = accepted as f64 / trials as f64;
        assert!((rate - (-1f64).exp()).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn improvements_always_accepted_and_best_tracks_minimum() {
        let p = sphere(2, 3.0);
        let cfg = RunConfig::default().with_max_generated(2000);
        let mut st = AnnealerState::init(&p, &cfg).unwrap();
        let mut min_seen = st.best_cost;
        for _ in 0..1000 {
            let c = st.generate_candidate(&p, &cfg).unwrap();
            let improving = c.cost < st.current_cost;
            min_seen = min_seen.min(c.cost);
            let d = st.accept_step(c, &cfg).unwrap();
            if improving {
                assert_eq!(d, Decision::Accepted);
            }
            assert_eq!(st.best_cost, min_seen);
        }
    }

    #[test]
    fn temperatures_follow_indices() {
        let p = sphere(2, 3.0);
        let cfg = RunConfig {
            reanneal: ReannealConfig {
                enabled: false,
                ..ReannealConfig::default()
            },
            ..RunConfig::default()
        };
        let mut st = AnnealerState::init(&p, &cfg).unwrap();
        for _ in 0..200 {
            let c = st.generate_candidate(&p, &cfg).unwrap();
            st.accept_step(c, &cfg).unwrap();
            for i in 0..2 {
                let want = crate::schedules::asa_temperature(
                    crate::schedules::AnnealIndex::new(st.indices[i]).unwrap(),
                    &st.param_schedules[i],
                );
                assert_eq!(st.temperatures[i], want);
            }
            let want_a = crate::schedules::asa_temperature(
                crate::schedules::AnnealIndex::new(st.accept_index).unwrap(),
                &st.accept_schedule,
            );
            assert_eq!(st.accept_temperature, want_a);
            assert_eq!(st.indices[0], (st.counters.generated - 1) as f64);
            assert_eq!(st.accept_index, (st.counters.accepted - 1) as f64);
        }
    }

    #[test]
    fn sphere_converges() {
        let report = run(&sphere(2, 3.0), &RunConfig::default().with_max_generated(10_000)).unwrap();
        assert!(report.best_cost < 1e-4, "best {}", report.best_cost);
    }

    #[test]
    fn target_at_initial_cost_stops_immediately() {
        let p = sphere(2, 3.0);
        let report = run(&p, &RunConfig::default().with_target(Some(18.0))).unwrap();
        assert_eq!(report.counters.generated, 1);
        assert_eq!(report.generated_at_target, Some(1));
        assert_eq!(report.termination, TerminationReason::TargetReached);
    }

    #[test]
    fn same_seed_same_report() {
        let p = testfns::shubert_problem();
        let cfg = RunConfig::default().with_seed(99).with_max_generated(3000);
        assert_eq!(run(&p, &cfg).unwrap(), run(&p, &cfg).unwrap());
        let other = run(&p, &cfg.clone().with_seed(100)).unwrap();
        assert_ne!(run(&p, &cfg).unwrap().best_point, other.best_point);
    }

    #[test]
    fn cost_failure_carries_context() {
        let p = ProblemSpec::with_fallible_cost(vec![ParameterSpec::real("a", -1.0, 1.0, 0.0)], |x| {
            if x[0] > 0.5 {
                Err("blew up".into())
            } else {
                Ok(x[0])
            }
        });
        match run(&p, &RunConfig::default()) {
            Err(AsaError::Cost { message, .. }) => assert_eq!(message, "blew up"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonfinite_costs_are_rejected() {
        let p = ProblemSpec::new(vec![ParameterSpec::real("a", -1.0, 1.0, 0.0)], |x| {
            if x[0] > 0.0 {
                f64::INFINITY
            } else {
                x[0]
            }
        });
        let report = run(&p, &RunConfig::default().with_max_generated(500)).unwrap();
        assert!(report.counters.nonfinite_costs > 0);
        assert!(report.final_point[0] <= 0.0);
        assert_eq!(
            report.counters.generated,
            report.counters.accepted + report.counters.rejected
        );
    }

    #[test]
    fn baselines_run_with_same_bookkeeping() {
        for alg in [Algorithm::Ba, Algorithm::Fa] {
            let mut cfg = RunConfig::default().with_algorithm(alg).with_max_generated(2000);
            cfg.termination.stall.cycles = 0;
            let r = run(&sphere(2, 3.0), &cfg).unwrap();
            assert_eq!(r.counters.generated, 2000);
            assert_eq!(r.counters.reanneals, 0);
            assert!(r.best_cost < 18.0);
        }
        let cfg = RunConfig {
            algorithm: Algorithm::Fa,
            cauchy_mode: CauchyMode::Isotropic,
            ..RunConfig::default().with_max_generated(1000)
        };
        assert!(run(&sphere(3, 3.0), &cfg).unwrap().best_cost < 27.0);
    }
}
