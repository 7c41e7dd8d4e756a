//! Temperature schedules and their inverses.
//!
//! The ASA schedule is `T(k) = T0 exp(-c k^(Q/D))` with `c = m exp(-n Q / D)`,
//! where `m` sets how many e-folds the temperature drops by the time `k`
//! reaches `exp(n)`, and `Q` is the quenching factor (`Q = 1` anneals,
//! `Q > 1` quenches). Baselines: logarithmic Boltzmann, geometric
//! "simulated quenching" and reciprocal fast annealing.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Temperatures never drop below this value.
pub const TEMPERATURE_FLOOR: f64 = 1e-300;

/// Default temperature-ratio scale, `-ln(1e-5)`.
pub fn default_m() -> f64 {
    -(1e-5f64).ln()
}

/// Default anneal scale, `ln(100)`.
pub fn default_n() -> f64 {
    100f64.ln()
}

/// A real-valued annealing time.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnnealIndex(f64);

impl AnnealIndex {
    pub const ZERO: AnnealIndex = AnnealIndex(0.0);

    pub fn new(k: f64) -> Result<Self> {
        if k.is_finite() && k >= 0.0 {
            Ok(AnnealIndex(k))
        } else {
            Err(domain(format!(
                "annealing index must be finite and non-negative, got {k}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Parameters of one ASA temperature schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub t0: f64,
    pub m: f64,
    pub n: f64,
    pub quench: f64,
    pub d_eff: usize,
}

impl ScheduleParams {
    pub fn new(t0: f64, m: f64, n: f64, quench: f64, d_eff: usize) -> Result<Self> {
        let p = ScheduleParams {
            t0,
            m,
            n,
            quench,
            d_eff,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.t0.is_finite()
            && self.t0 > 0.0
            && self.m.is_finite()
            && self.m > 0.0
            && self.n.is_finite()
            && self.n >= 0.0
            && self.quench.is_finite()
            && self.quench > 0.0
            && self.d_eff >= 1;
        if ok {
            Ok(())
        } else {
            Err(domain(format!("invalid schedule parameters {self:?}")))
        }
    }

    /// The schedule constant `c`.
    pub fn scale(&self) -> f64 {
        schedule_scale(self.m, self.n, self.quench, self.d_eff)
    }

    /// Exponent applied to `k`: `Q / D`.
    pub fn exponent(&self) -> f64 {
        self.quench / self.d_eff as f64
    }
}

/// `c = m exp(-n Q / D)`.
pub fn schedule_scale(m: f64, n: f64, quench: f64, d_eff: usize) -> f64 {
    m * (-n * quench / d_eff as f64).exp()
}

pub fn asa_temperature(k: AnnealIndex, p: &ScheduleParams) -> f64 {
    asa_temperature_raw(k.0, p.t0, p.scale(), p.exponent())
}

#[inline]
pub(crate) fn asa_temperature_raw(k: f64, t0: f64, c: f64, exponent: f64) -> f64 {
    if k == 0.0 {
        return t0;
    }
    (t0 * (-c * k.powf(exponent)).exp()).max(TEMPERATURE_FLOOR)
}

/// Result of inverting the ASA schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexInversion {
    pub index: AnnealIndex,
    /// Set when the requested temperature exceeded `T0` and the index was clamped to zero.
    pub clamped: bool,
}

/// `k = (ln(T0/T) / c)^(D/Q)`, the inverse of [`asa_temperature`].
pub fn index_for_temperature(t: f64, p: &ScheduleParams) -> Result<IndexInversion> {
    if !(t.is_finite() && t > 0.0) {
        return Err(domain(format!("temperature must be finite and positive, got {t}")));
    }
    Ok(index_for_temperature_raw(t, p.t0, p.scale(), p.exponent()))
}

pub(crate) fn index_for_temperature_raw(t: f64, t0: f64, c: f64, exponent: f64) -> IndexInversion {
    if t >= t0 {
        return IndexInversion {
            index: AnnealIndex::ZERO,
            clamped: t > t0,
        };
    }
    let k = ((t0 / t).ln() / c).powf(1.0 / exponent);
    IndexInversion {
        index: AnnealIndex(if k.is_finite() { k } else { f64::MAX }),
        clamped: false,
    }
}

/// Logarithmic Boltzmann schedule `T0 ln(k0) / ln(k)`.
pub fn ba_temperature(k: AnnealIndex, t0: f64, k0: f64) -> Result<f64> {
    if !(k0 >= 2.0) {
        return Err(domain(format!("starting index k0 must be at least 2, got {k0}")));
    }
    if k.0 < k0 {
        return Err(domain(format!("index {} precedes starting index {k0}", k.0)));
    }
    Ok((t0 * k0.ln() / k.0.ln()).max(TEMPERATURE_FLOOR))
}

/// Geometric schedule `T0 c^k`.
pub fn sq_exponential_temperature(k: AnnealIndex, t0: f64, c_ratio: f64) -> Result<f64> {
    if !(c_ratio > 0.0 && c_ratio < 1.0) {
        return Err(domain(format!("cooling ratio must lie in (0, 1), got {c_ratio}")));
    }
    Ok((t0 * c_ratio.powf(k.0)).max(TEMPERATURE_FLOOR))
}

/// Reciprocal fast-annealing schedule `T0 / k`.
pub fn fa_temperature(k: AnnealIndex, t0: f64) -> Result<f64> {
    if k.0 < 1.0 {
        return Err(domain(format!("fast-annealing index must be at least 1, got {}", k.0)));
    }
    Ok((t0 / k.0).max(TEMPERATURE_FLOOR))
}

/// Schedule families whose generating-probability partial sums can be compared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProofFamily {
    /// Gaussian generation on a logarithmic schedule: terms `1/k` from `k = 2`.
    BaLog,
    /// Cauchy generation on a reciprocal schedule: terms `1/k`.
    FaReciprocal,
    /// ASA generation on its own schedule: terms `1/k` (up to a constant factor).
    Asa,
    /// ASA with quenching factor `Q`: terms `1/k^Q`.
    AsaQuenched(f64),
}

/// Partial sum of the per-step generating probabilities up to `horizon`.
///
/// A sum that diverges as the horizon grows means every region keeps being
/// visited; a convergent one means the schedule cools too fast for that.
pub fn proof_sum_diagnostic(family: ProofFamily, horizon: u64) -> Result<f64> {
    if horizon < 10 {
        return Err(domain(format!("horizon must be at least 10, got {horizon}")));
    }
    let (start, power) = match family {
        ProofFamily::BaLog => (2u64, 1.0),
        ProofFamily::FaReciprocal | ProofFamily::Asa => (1, 1.0),
        ProofFamily::AsaQuenched(q) => {
            if !(q.is_finite() && q > 0.0) {
                return Err(domain(format!("quench factor must be positive, got {q}")));
            }
            (1, q)
        }
    };
    // Smallest terms first.
    let sum = (start..=horizon)
        .rev()
        .map(|k| {
            let k = k as f64;
            if power == 1.0 {
                1.0 / k
            } else {
                k.powf(-power)
            }
        })
        .sum();
    Ok(sum)
}
