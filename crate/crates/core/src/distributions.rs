//! Generating densities, inverse-CDF samplers and acceptance functions.
//!
//! Three generating families are provided:
//!
//! * the ASA product density over relative steps `y ∈ [-1, 1]^D`, whose
//!   one-dimensional factor is `1 / (2 (|y| + T) ln(1 + 1/T))`; it is fat-tailed
//!   yet bounded, so step sizes are roughly log-uniform between `T` and 1;
//! * the Boltzmann (Gaussian) density with per-coordinate variance `T`;
//! * the Cauchy density with scale `T`, in product or isotropic form.
//!
//! Everything here is a pure function of its arguments; callers own their RNG.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, AsaError, Result};

/// Exponent arguments are clamped to this magnitude before `exp`.
pub const EXP_ARG_LIMIT: f64 = 700.0;

/// A uniform variate on the closed unit interval.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct UnitUniform(f64);

impl UnitUniform {
    pub fn new(u: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&u) {
            Ok(UnitUniform(u))
        } else {
            Err(domain(format!("uniform variate {u} outside [0, 1]")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// A relative step in `[-1, 1]`; the absolute step is `y * (upper - lower)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ScaledStep(f64);

impl ScaledStep {
    pub fn new(y: f64) -> Result<Self> {
        if (-1.0..=1.0).contains(&y) {
            Ok(ScaledStep(y))
        } else {
            Err(domain(format!("scaled step {y} outside [-1, 1]")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// How a cost increase is turned into an acceptance probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AcceptanceForm {
    /// `min(1, exp(-dE/T))`.
    #[default]
    MetropolisExp,
    /// `1 / (1 + exp(dE/T))`.
    Logistic,
    /// `min(1, [1 - (1-q) dE/T]^(1/(1-q)))`, zero where the bracket is not positive.
    Tsallis { q: f64 },
}

impl AcceptanceForm {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AcceptanceForm::Tsallis { q } if !q.is_finite() || q == 1.0 => Err(domain(format!(
                "tsallis q must be finite and different from 1 (got {q}); use metropolis-exp for q = 1"
            ))),
            _ => Ok(()),
        }
    }
}

/// Cauchy draws: independent one-dimensional factors, or the D-dimensional radial law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CauchyMode {
    #[default]
    Product,
    Isotropic,
}

#[inline]
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("temperature must be finite and positive, got {t}")))
    }
}

/// Inverse-CDF draw of one ASA relative step.
pub fn asa_draw(u: UnitUniform, t: f64) -> Result<ScaledStep> {
    check_temperature(t)?;
    Ok(ScaledStep(asa_draw_unchecked(u.0, t)))
}

#[inline]
pub(crate) fn asa_draw_unchecked(u: f64, t: f64) -> f64 {
    let s = sgn(u - 0.5);
    if s == 0.0 {
        return 0.0;
    }
    let a = (2.0 * u - 1.0).abs();
    let y = t * (a * (1.0 / t).ln_1p()).exp_m1();
    s * y.min(1.0)
}

/// Cumulative distribution of one ASA relative step; exact inverse of [`asa_draw`].
pub fn asa_cdf(y: ScaledStep, t: f64) -> Result<UnitUniform> {
    check_temperature(t)?;
    Ok(UnitUniform(asa_cdf_unchecked(y.0, t)))
}

#[inline]
pub(crate) fn asa_cdf_unchecked(y: f64, t: f64) -> f64 {
    let g = 0.5 + 0.5 * sgn(y) * (y.abs() / t).ln_1p() / (1.0 / t).ln_1p();
    g.clamp(0.0, 1.0)
}

#[inline]
pub(crate) fn asa_density_1d(y: f64, t: f64) -> f64 {
    1.0 / (2.0 * (y.abs() + t) * (1.0 / t).ln_1p())
}

/// Product density of an ASA step vector at per-coordinate temperatures.
pub fn asa_density(y: &[ScaledStep], t: &[f64]) -> Result<f64> {
    if y.len() != t.len() {
        return Err(AsaError::DimensionMismatch {
            expected: t.len(),
            got: y.len(),
        });
    }
    let mut g = 1.0;
    for (yi, &ti) in y.iter().zip(t) {
        check_temperature(ti)?;
        g *= asa_density_1d(yi.0, ti);
    }
    Ok(g)
}

/// Gaussian step vector with per-coordinate variance `t`.
pub fn boltzmann_draw<R: Rng + ?Sized>(rng: &mut R, t: f64, dim: usize) -> Result<Vec<f64>> {
    check_temperature(t)?;
    if dim == 0 {
        return Err(domain("dimension must be at least 1"));
    }
    let normal = Normal::new(0.0, t.sqrt()).map_err(|e| domain(e.to_string()))?;
    Ok((0..dim).map(|_| normal.sample(rng)).collect())
}

#[inline]
pub(crate) fn boltzmann_step<R: Rng + ?Sized>(rng: &mut R, t: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z * t.sqrt()
}

#[inline]
pub(crate) fn cauchy_step<R: Rng + ?Sized>(rng: &mut R, t: f64) -> f64 {
    let u: f64 = rng.random();
    t * (std::f64::consts::PI * (u - 0.5)).tan()
}

/// Cauchy step vector with scale `t`.
///
/// Isotropic mode samples the multivariate Cauchy law `T / (|x|² + T²)^((D+1)/2)`
/// as `T · Z / |W|` with `Z ~ N(0, I_D)` and `W ~ N(0, 1)`.
pub fn cauchy_draw<R: Rng + ?Sized>(rng: &mut R, t: f64, dim: usize, mode: CauchyMode) -> Result<Vec<f64>> {
    check_temperature(t)?;
    if dim == 0 {
        return Err(domain("dimension must be at least 1"));
    }
    Ok(match mode {
        CauchyMode::Product => (0..dim).map(|_| cauchy_step(rng, t)).collect(),
        CauchyMode::Isotropic => isotropic_cauchy(rng, t, dim),
    })
}

pub(crate) fn isotropic_cauchy<R: Rng + ?Sized>(rng: &mut R, t: f64, dim: usize) -> Vec<f64> {
    let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let w: f64 = StandardNormal.sample(rng);
    let scale = t / w.abs().max(f64::MIN_POSITIVE);
    z.into_iter().map(|zi| zi * scale).collect()
}

#[inline]
fn clamped_exp(x: f64) -> f64 {
    x.clamp(-EXP_ARG_LIMIT, EXP_ARG_LIMIT).exp()
}

/// Probability of accepting a move whose cost changes by `de` at acceptance temperature `ta`.
///
/// For the min-capped forms an improvement (`de <= 0`) is always accepted, which
/// also fixes the Tsallis bracket convention for `q > 1` and negative `de`.
pub fn acceptance_probability(de: f64, ta: f64, form: AcceptanceForm) -> Result<f64> {
    check_temperature(ta)?;
    if de.is_nan() {
        return Err(domain("cost difference is NaN"));
    }
    form.validate()?;
    Ok(acceptance_unchecked(de, ta, form))
}

pub(crate) fn acceptance_unchecked(de: f64, ta: f64, form: AcceptanceForm) -> f64 {
    let x = de / ta;
    match form {
        AcceptanceForm::MetropolisExp => {
            if x <= 0.0 {
                1.0
            } else {
                clamped_exp(-x)
            }
        }
        AcceptanceForm::Logistic => 1.0 / (1.0 + clamped_exp(x)),
        AcceptanceForm::Tsallis { q } => {
            if x <= 0.0 {
                return 1.0;
            }
            let bracket = 1.0 - (1.0 - q) * x;
            if bracket <= 0.0 || !bracket.is_finite() {
                return 0.0;
            }
            clamped_exp(bracket.ln() / (1.0 - q)).min(1.0)
        }
    }
}
