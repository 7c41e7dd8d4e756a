//! Benchmark cost functions with known global minima.

use crate::error::{AsaError, Result};
use crate::problem::{ParameterSpec, ProblemSpec};

pub const CORANA_RANGE: f64 = 10_000.0;
const CORANA_S: f64 = 0.2;
const CORANA_T: f64 = 0.05;
const CORANA_D: [f64; 4] = [1.0, 1000.0, 10.0, 100.0];

/// Global minimum value of [`shubert`].
pub const SHUBERT_MINIMUM: f64 = -186.7309;
pub const SHUBERT_MINIMIZERS: usize = 18;

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Corana's discretized paraboloid in four dimensions.
///
/// Each coordinate is snapped to the nearest multiple of 0.2; inside a window
/// of half-width 0.05 around the snapped value the term is a flat plateau,
/// elsewhere it is the full quadratic. The global plateau is `|x_i| < 0.05`.
pub fn corana(x: &[f64]) -> f64 {
    x.iter()
        .zip(CORANA_D)
        .map(|(&xi, di)| {
            let z = ((xi.abs() / CORANA_S + 0.49999).trunc()) * CORANA_S * sgn(xi);
            if (xi - z).abs() < CORANA_T {
                let c = z - 0.05 * sgn(z);
                0.15 * c * c * di
            } else {
                di * xi * xi
            }
        })
        .sum()
}

fn shubert_factor(x: f64) -> f64 {
    (1..=5)
        .map(|j| {
            let j = j as f64;
            j * ((j + 1.0) * x + j).cos()
        })
        .sum()
}

/// Two-dimensional Shubert function: product of two cosine sums.
pub fn shubert(x: &[f64]) -> f64 {
    shubert_factor(x[0]) * shubert_factor(x[1])
}

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[derive(Debug, Clone)]
pub struct BenchmarkProblem {
    pub name: String,
    pub problem: ProblemSpec,
    pub global_minimum: f64,
    pub minimizer_count: Option<usize>,
    /// A run has found the minimum once its best cost is within this of `global_minimum`.
    pub tolerance: f64,
}

impl BenchmarkProblem {
    pub fn target(&self) -> f64 {
        self.global_minimum + self.tolerance
    }
}

pub const CATALOG: [&str; 3] = ["corana", "shubert", "sphere"];

pub fn corana_problem() -> ProblemSpec {
    let params = (0..4)
        .map(|i| ParameterSpec::real(format!("x{i}"), -CORANA_RANGE, CORANA_RANGE, 999.0))
        .collect();
    ProblemSpec::new(params, corana)
}

pub fn shubert_problem() -> ProblemSpec {
    let params = (0..2)
        .map(|i| ParameterSpec::real(format!("x{i}"), -10.0, 10.0, 0.0))
        .collect();
    ProblemSpec::new(params, shubert)
}

pub fn sphere_problem(dim: usize) -> ProblemSpec {
    let params = (0..dim)
        .map(|i| ParameterSpec::real(format!("x{i}"), -5.0, 5.0, 2.5))
        .collect();
    ProblemSpec::new(params, sphere)
}

/// Catalog entry by name; `sphere` gets two dimensions.
pub fn catalog(name: &str) -> Result<BenchmarkProblem> {
    catalog_with_dim(name, None)
}

/// Catalog entry by name, with an explicit dimension for problems that accept one.
pub fn catalog_with_dim(name: &str, dim: Option<usize>) -> Result<BenchmarkProblem> {
    let fixed_dim = |d: usize| -> Result<()> {
        match dim {
            Some(n) if n != d => Err(AsaError::InvalidConfig(format!(
                "problem `{name}` has fixed dimension {d}, not {n}"
            ))),
            _ => Ok(()),
        }
    };
    match name {
        "corana" => {
            fixed_dim(4)?;
            Ok(BenchmarkProblem {
                name: name.into(),
                problem: corana_problem(),
                global_minimum: 0.0,
                minimizer_count: None,
                tolerance: 1e-6,
            })
        }
        "shubert" => {
            fixed_dim(2)?;
            Ok(BenchmarkProblem {
                name: name.into(),
                problem: shubert_problem(),
                global_minimum: SHUBERT_MINIMUM,
                minimizer_count: Some(SHUBERT_MINIMIZERS),
                tolerance: 1e-3,
            })
        }
        "sphere" => {
            let d = dim.unwrap_or(2);
            if d == 0 {
                return Err(AsaError::InvalidConfig("sphere dimension must be at least 1".into()));
            }
            Ok(BenchmarkProblem {
                name: name.into(),
                problem: sphere_problem(d),
                global_minimum: 0.0,
                minimizer_count: Some(1),
                tolerance: 1e-6,
            })
        }
        _ => Err(AsaError::UnknownProblem {
            name: name.into(),
            available: CATALOG.iter().map(|s| s.to_string()).collect(),
        }),
    }
}
