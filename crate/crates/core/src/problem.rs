use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{AsaError, Result};

/// Cost function. An `Err` aborts the run with context.
pub type CostFn = Arc<dyn Fn(&[f64]) -> std::result::Result<f64, String> + Send + Sync>;
/// Feasibility predicate, checked before the cost is evaluated.
pub type FeasibleFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ParamKind {
    #[default]
    Real,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub kind: ParamKind,
    pub initial: f64,
}

impl ParameterSpec {
    pub fn real(name: impl Into<String>, lower: f64, upper: f64, initial: f64) -> Self {
        ParameterSpec {
            name: name.into(),
            lower,
            upper,
            kind: ParamKind::Real,
            initial,
        }
    }

    pub fn integer(name: impl Into<String>, lower: f64, upper: f64, initial: f64) -> Self {
        ParameterSpec {
            kind: ParamKind::Integer,
            ..ParameterSpec::real(name, lower, upper, initial)
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// A parameter with a zero-width range never moves and is left out of the schedule dimension.
    pub fn is_fixed(&self) -> bool {
        self.width() == 0.0
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    /// Smallest and largest admissible values after integer rounding.
    pub fn admissible_bounds(&self) -> (f64, f64) {
        match self.kind {
            ParamKind::Real => (self.lower, self.upper),
            ParamKind::Integer => (self.lower.ceil(), self.upper.floor()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite()) {
            return Err(AsaError::InvalidProblem(format!(
                "parameter `{}` has a non-finite bound",
                self.name
            )));
        }
        if self.lower > self.upper {
            return Err(AsaError::ParameterRange {
                name: self.name.clone(),
                lower: self.lower,
                upper: self.upper,
            });
        }
        if self.kind == ParamKind::Integer && self.lower.ceil() > self.upper.floor() {
            return Err(AsaError::InvalidProblem(format!(
                "integer parameter `{}` has no integral value in [{}, {}]",
                self.name, self.lower, self.upper
            )));
        }
        if !self.contains(self.initial) {
            return Err(AsaError::InvalidProblem(format!(
                "initial value {} of `{}` lies outside [{}, {}]",
                self.initial, self.name, self.lower, self.upper
            )));
        }
        if self.kind == ParamKind::Integer && self.initial.fract() != 0.0 {
            return Err(AsaError::InvalidProblem(format!(
                "initial value {} of integer parameter `{}` is not integral",
                self.initial, self.name
            )));
        }
        Ok(())
    }
}

/// Round to nearest, ties toward zero.
pub fn round_ties_toward_zero(x: f64) -> f64 {
    let t = x.trunc();
    if (x - t).abs() == 0.5 {
        t
    } else {
        x.round()
    }
}

/// The system under optimization.
#[derive(Clone)]
pub struct ProblemSpec {
    pub parameters: Vec<ParameterSpec>,
    cost: CostFn,
    feasible: Option<FeasibleFn>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("parameters", &self.parameters)
            .field("feasible", &self.feasible.is_some())
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new<F>(parameters: Vec<ParameterSpec>, cost: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ProblemSpec {
            parameters,
            cost: Arc::new(move |x| Ok(cost(x))),
            feasible: None,
        }
    }

    pub fn with_fallible_cost<F>(parameters: Vec<ParameterSpec>, cost: F) -> Self
    where
        F: Fn(&[f64]) -> std::result::Result<f64, String> + Send + Sync + 'static,
    {
        ProblemSpec {
            parameters,
            cost: Arc::new(cost),
            feasible: None,
        }
    }

    pub fn with_feasibility<P>(mut self, feasible: P) -> Self
    where
        P: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        self.feasible = Some(Arc::new(feasible));
        self
    }

    /// Same problem with a different starting point.
    pub fn with_initial(mut self, point: &[f64]) -> Result<Self> {
        if point.len() != self.parameters.len() {
            return Err(AsaError::DimensionMismatch {
                expected: self.parameters.len(),
                got: point.len(),
            });
        }
        for (p, &x) in self.parameters.iter_mut().zip(point) {
            p.initial = x;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.parameters.len()
    }

    /// Number of parameters with a non-zero range.
    pub fn effective_dim(&self) -> usize {
        self.parameters.iter().filter(|p| !p.is_fixed()).count()
    }

    pub fn initial_point(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.initial).collect()
    }

    pub fn lower_bounds(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.lower).collect()
    }

    pub fn upper_bounds(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.upper).collect()
    }

    pub fn cost(&self, x: &[f64]) -> std::result::Result<f64, String> {
        (self.cost)(x)
    }

    pub fn is_feasible(&self, x: &[f64]) -> bool {
        self.feasible.as_ref().is_none_or(|f| f(x))
    }

    pub fn has_feasibility(&self) -> bool {
        self.feasible.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if self.parameters.is_empty() {
            return Err(AsaError::InvalidProblem("at least one parameter is required".into()));
        }
        self.parameters.iter().try_for_each(ParameterSpec::validate)
    }
}
