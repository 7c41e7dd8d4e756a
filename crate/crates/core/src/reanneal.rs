//! Reannealing: rescale parameter temperatures by relative cost sensitivity
//! and reset the acceptance temperature to the scale of recent costs.
//!
//! A parameter whose sensitivity `s_i = |∂L/∂α_i|` is small compared with the
//! largest one gets its temperature raised by `s_max / s_i` (capped at its
//! initial value), which stretches the range it is searched over. Indices are
//! then re-derived from the schedule inverse so that the schedule keeps
//! cooling from the new temperature.

use crate::anneal::{AnnealerState, RunConfig, ACCEPT_TEMPERATURE_FLOOR};
use crate::error::{domain, Result};
use crate::problem::{ParamKind, ProblemSpec};
use crate::schedules::{asa_temperature_raw, index_for_temperature_raw, ScheduleParams};

/// Sensitivities below this fraction of the largest one are treated as zero.
pub const TINY_SENSITIVITY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityVector {
    pub s: Vec<f64>,
    pub s_max: f64,
    /// Parameters whose probe evaluation failed; their `s_i` is zero.
    pub failed: Vec<usize>,
    pub evaluations: u64,
}

impl SensitivityVector {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if s.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(domain("sensitivities must be finite and non-negative"));
        }
        let s_max = s.iter().copied().fold(0.0, f64::max);
        Ok(SensitivityVector {
            s,
            s_max,
            failed: Vec::new(),
            evaluations: 0,
        })
    }
}

/// One-sided finite-difference sensitivities at `point`.
pub fn sensitivities(problem: &ProblemSpec, point: &[f64], fd_step: f64) -> Result<SensitivityVector> {
    let base = problem
        .cost(point)
        .map_err(|message| crate::AsaError::Cost { generated: 0, message })?;
    let mut sv = sensitivities_from(problem, point, base, fd_step);
    sv.evaluations += 1;
    Ok(sv)
}

/// As [`sensitivities`], reusing an already known cost at `point`.
pub fn sensitivities_from(problem: &ProblemSpec, point: &[f64], base_cost: f64, fd_step: f64) -> SensitivityVector {
    let mut s = vec![0.0; point.len()];
    let mut failed = Vec::new();
    let mut evaluations = 0;
    let mut probe = point.to_vec();
    for (i, spec) in problem.parameters.iter().enumerate() {
        if spec.is_fixed() {
            continue;
        }
        let mut h = fd_step * spec.width();
        if spec.kind == ParamKind::Integer {
            h = h.round().max(1.0);
        }
        let room_up = spec.upper - point[i];
        let room_down = point[i] - spec.lower;
        let delta = if room_up >= h {
            h
        } else if room_down >= h {
            -h
        } else if room_up >= room_down {
            room_up
        } else {
            -room_down
        };
        if delta == 0.0 {
            continue;
        }
        probe[i] = point[i] + delta;
        evaluations += 1;
        match problem.cost(&probe) {
            Ok(c) if c.is_finite() => s[i] = ((c - base_cost) / delta).abs(),
            _ => failed.push(i),
        }
        probe[i] = point[i];
    }
    let s_max = s.iter().copied().fold(0.0, f64::max);
    SensitivityVector {
        s,
        s_max,
        failed,
        evaluations,
    }
}

/// New temperature and index for one parameter scaled by `ratio = s_max / s_i`.
pub fn rescale_parameter(t: f64, ratio: f64, params: &ScheduleParams) -> (f64, f64) {
    let t_new = (t * ratio).min(params.t0);
    let k = index_for_temperature_raw(t_new, params.t0, params.scale(), params.exponent());
    (t_new, k.index.get())
}

/// Outcome of a parameter rescale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RescaleOutcome {
    Applied,
    /// `s_max` was zero; nothing changed.
    Skipped,
}

/// Rescales every non-fixed parameter with a usable sensitivity.
pub fn reanneal_parameters(state: &mut AnnealerState, sens: &SensitivityVector) -> RescaleOutcome {
    if !(sens.s_max > 0.0) {
        return RescaleOutcome::Skipped;
    }
    for i in 0..state.temperatures.len() {
        let s_i = sens.s[i];
        if state.is_fixed(i) || s_i < TINY_SENSITIVITY * sens.s_max {
            continue;
        }
        let params = state.param_schedules[i];
        let (t, k) = rescale_parameter(state.temperatures[i], sens.s_max / s_i, &params);
        state.indices[i] = k;
        // Recompute from the index so temperature and index stay coupled.
        state.temperatures[i] = asa_temperature_raw(k, params.t0, params.scale(), params.exponent());
        debug_assert!((state.temperatures[i] - t).abs() <= 1e-9 * t);
    }
    RescaleOutcome::Applied
}

/// Resets the acceptance schedule from the magnitudes of the best, last and current costs.
///
/// The initial acceptance temperature becomes `max(|current|, |best|)` and the
/// acceptance temperature `min(|current|, |best|, |last|)`, each floored at
/// [`ACCEPT_TEMPERATURE_FLOOR`]; the index is re-derived from the schedule inverse.
pub fn reanneal_acceptance(state: &mut AnnealerState, best_cost: f64, last_cost: f64, current_cost: f64) {
    let t0 = current_cost.abs().max(best_cost.abs()).max(ACCEPT_TEMPERATURE_FLOOR);
    let t = current_cost
        .abs()
        .min(best_cost.abs())
        .min(last_cost.abs())
        .clamp(ACCEPT_TEMPERATURE_FLOOR, t0);
    state.accept_schedule.t0 = t0;
    let p = state.accept_schedule;
    let k = index_for_temperature_raw(t, t0, p.scale(), p.exponent()).index.get();
    state.accept_index = k;
    state.accept_temperature = state.acceptance_temperature_at(k);
}

/// Full reanneal cycle used by the engine: sensitivities at the best point,
/// parameter rescale, acceptance reset.
pub fn reanneal_cycle(state: &mut AnnealerState, problem: &ProblemSpec, config: &RunConfig) -> Result<()> {
    let best = state.best.clone();
    let sens = sensitivities_from(problem, &best, state.best_cost, config.fd_step);
    state.counters.probe_evaluations += sens.evaluations;
    state.counters.sensitivity_failures += sens.failed.len() as u64;
    reanneal_parameters(state, &sens);
    let (best_cost, last_cost, current_cost) = (state.best_cost, state.last_cost, state.current_cost);
    reanneal_acceptance(state, best_cost, last_cost, current_cost);
    state.counters.reanneals += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ParameterSpec;
    use approx::assert_relative_eq;

    fn quadratic(a: Vec<f64>, start: f64) -> ProblemSpec {
        let params = (0..a.len())
            .map(|i| ParameterSpec::real(format!("x{i}"), -5.0, 5.0, start))
            .collect();
        ProblemSpec::new(params, move |x| x.iter().zip(&a).map(|(v, ai)| ai * v * v).sum())
    }

    #[test]
    fn gradient_magnitudes() {
        let p = quadratic(vec![1.0, 4.0], 1.0);
        let s = sensitivities(&p, &[1.0, 1.0], 1e-5).unwrap();
        assert_relative_eq!(s.s[0], 2.0, max_relative = 1e-3);
        assert_relative_eq!(s.s[1], 8.0, max_relative = 1e-3);
        assert_eq!(s.s_max, s.s[1]);
    }

    #[test]
    fn flat_cost_gives_zero_and_skips() {
        let p = ProblemSpec::new(vec![ParameterSpec::real("a", 0.0, 1.0, 0.5)], |_| 3.0);
        let s = sensitivities(&p, &[0.5], 1e-5).unwrap();
        assert_eq!(s.s, vec![0.0]);
        let mut st = AnnealerState::init(&p, &RunConfig::default()).unwrap();
        assert_eq!(reanneal_parameters(&mut st, &s), RescaleOutcome::Skipped);
    }

    #[test]
    fn symmetric_cost_gives_equal_sensitivities() {
        let p = quadratic(vec![1.0; 3], 1.0);
        let s = sensitivities(&p, &[1.0; 3], 1e-5).unwrap();
        assert!((s.s[0] - s.s[1]).abs() < 1e-6 && (s.s[1] - s.s[2]).abs() < 1e-6);
    }

    #[test]
    fn probe_steps_inward_at_upper_bound() {
        let p = quadratic(vec![1.0], 5.0);
        let s = sensitivities(&p, &[5.0], 1e-5).unwrap();
        assert_relative_eq!(s.s[0], 10.0, max_relative = 1e-3);
    }

    #[test]
    fn failing_probe_is_flagged() {
        let p = ProblemSpec::with_fallible_cost(
            vec![
                ParameterSpec::real("a", 0.0, 1.0, 0.5),
                ParameterSpec::real("b", 0.0, 1.0, 0.5),
            ],
            |x| if x[1] > 0.5 { Err("no".into()) } else { Ok(x[0] + x[1]) },
        );
        let s = sensitivities(&p, &[0.5, 0.5], 1e-3).unwrap();
        assert_eq!(s.failed, vec![1]);
        assert_eq!(s.s[1], 0.0);
        assert!(s.s[0] > 0.0);
    }

    #[test]
    fn hand_rescale() {
        // c = m exp(-n Q / D) = 1 with m = 1, n = 0
        let params = ScheduleParams::new(1.0, 1.0, 0.0, 1.0, 1).unwrap();
        let (t, k) = rescale_parameter(0.1, 2.0, &params);
        assert_relative_eq!(t, 0.2, max_relative = 1e-15);
        assert_relative_eq!(k, 5f64.ln(), max_relative = 1e-12);

        let (t, k) = rescale_parameter(0.9, 100.0, &params);
        assert_eq!(t, 1.0);
        assert_eq!(k, 0.0);
    }

    #[test]
    fn acceptance_reset_examples() {
        let p = quadratic(vec![1.0], 1.0);
        let mut st = AnnealerState::init(&p, &RunConfig::default()).unwrap();

        reanneal_acceptance(&mut st, -5.0, -5.0, -5.0);
        assert_eq!(st.accept_schedule.t0, 5.0);
        assert_eq!(st.accept_temperature, 5.0);
        assert_eq!(st.accept_index, 0.0);

        reanneal_acceptance(&mut st, -10.0, -4.0, -2.0);
        assert_eq!(st.accept_schedule.t0, 10.0);
        assert_relative_eq!(st.accept_temperature, 2.0, max_relative = 1e-12);

        reanneal_acceptance(&mut st, 0.0, 0.0, 0.0);
        assert_eq!(st.accept_schedule.t0, ACCEPT_TEMPERATURE_FLOOR);
        assert_eq!(st.accept_temperature, ACCEPT_TEMPERATURE_FLOOR);
        assert_eq!(st.accept_index, 0.0);
    }
}
