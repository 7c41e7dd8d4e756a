use serde::{Deserialize, Serialize};

use crate::error::{AsaError, Result};
use crate::problem::{ParamKind, ProblemSpec};

/// Finite-difference curvature of the cost at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    /// Symmetric matrix of second partial derivatives.
    pub hessian: Vec<Vec<f64>>,
    pub second_derivatives: Vec<f64>,
    /// `[∂²L/∂αᵢ²]^(-1/2)`; `None` where the second derivative is not positive.
    pub std_devs: Vec<Option<f64>>,
    pub steps: Vec<f64>,
}

impl CurvatureReport {
    pub fn off_diagonal(&self, i: usize, j: usize) -> f64 {
        self.hessian[i][j]
    }
}

/// Two probe offsets per coordinate: `(+h, -h)` when both fit in range,
/// otherwise `(+h, 0)` or `(-h, 0)` for a one-sided difference.
#[derive(Debug, Clone, Copy)]
struct Probe {
    hi: f64,
    lo: f64,
    central: bool,
}

fn probe_for(problem: &ProblemSpec, point: &[f64], i: usize, fd_step: f64) -> Option<Probe> {
    let p = &problem.parameters[i];
    if p.is_fixed() {
        return None;
    }
    let mut h = fd_step * p.width();
    if p.kind == ParamKind::Integer {
        h = h.round().max(1.0);
    }
    let room_up = p.upper - point[i];
    let room_down = point[i] - p.lower;
    let shrunk = h.min(room_up).min(room_down);
    let usable = if p.kind == ParamKind::Integer {
        shrunk >= 1.0
    } else {
        shrunk > h * 1e-3
    };
    if usable {
        let s = if p.kind == ParamKind::Integer {
            shrunk.floor()
        } else {
            shrunk
        };
        return Some(Probe {
            hi: s,
            lo: -s,
            central: true,
        });
    }
    // Pinned against a bound: step inward twice.
    let h = h.min(room_up.max(room_down) / 2.0);
    if room_up >= room_down {
        Some(Probe {
            hi: h,
            lo: 0.0,
            central: false,
        })
    } else {
        Some(Probe {
            hi: 0.0,
            lo: -h,
            central: false,
        })
    }
}

/// Central-difference Hessian, per-parameter curvature "standard deviations" and mixed partials.
pub fn curvature_diagnostics(problem: &ProblemSpec, point: &[f64], fd_step: f64) -> Result<CurvatureReport> {
    let dim = problem.dim();
    if point.len() != dim {
        return Err(AsaError::DimensionMismatch {
            expected: dim,
            got: point.len(),
        });
    }
    if !(fd_step.is_finite() && fd_step > 0.0) {
        return Err(AsaError::InvalidConfig(format!(
            "finite-difference step must be positive, got {fd_step}"
        )));
    }
    let eval = |x: &[f64]| problem.cost(x).ok().filter(|c| c.is_finite()).unwrap_or(f64::NAN);
    let shifted = |moves: &[(usize, f64)]| {
        let mut x = point.to_vec();
        for &(i, d) in moves {
            x[i] += d;
        }
        eval(&x)
    };

    let probes: Vec<Option<Probe>> = (0..dim).map(|i| probe_for(problem, point, i, fd_step)).collect();
    let f0 = eval(point);
    let mut hessian = vec![vec![0.0; dim]; dim];
    let mut steps = vec![0.0; dim];

    for i in 0..dim {
        let Some(pi) = probes[i] else { continue };
        let h = pi.hi - pi.lo;
        steps[i] = if pi.central { pi.hi } else { h };
        hessian[i][i] = if pi.central {
            (shifted(&[(i, pi.hi)]) - 2.0 * f0 + shifted(&[(i, pi.lo)])) / (pi.hi * pi.hi)
        } else {
            let d = if pi.hi > 0.0 { pi.hi } else { pi.lo };
            (shifted(&[(i, 2.0 * d)]) - 2.0 * shifted(&[(i, d)]) + f0) / (d * d)
        };
        for j in 0..i {
            let Some(pj) = probes[j] else { continue };
            let mixed = (shifted(&[(i, pi.hi), (j, pj.hi)])
                - shifted(&[(i, pi.hi), (j, pj.lo)])
                - shifted(&[(i, pi.lo), (j, pj.hi)])
                + shifted(&[(i, pi.lo), (j, pj.lo)]))
                / ((pi.hi - pi.lo) * (pj.hi - pj.lo));
            hessian[i][j] = mixed;
            hessian[j][i] = mixed;
        }
    }

    let second_derivatives: Vec<f64> = (0..dim).map(|i| hessian[i][i]).collect();
    let std_devs = second_derivatives
        .iter()
        .zip(&probes)
        .map(|(&d, p)| (p.is_some() && d > 0.0).then(|| d.powf(-0.5)))
        .collect();
    Ok(CurvatureReport {
        hessian,
        second_derivatives,
        std_devs,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ParameterSpec;

    fn box2(cost: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> ProblemSpec {
        ProblemSpec::new(
            vec![
                ParameterSpec::real("a", -5.0, 5.0, 0.0),
                ParameterSpec::real("b", -5.0, 5.0, 0.0),
            ],
            cost,
        )
    }

    #[test]
    fn sphere_at_origin() {
        let p = box2(|x| x.iter().map(|v| v * v).sum());
        let r = curvature_diagnostics(&p, &[0.0, 0.0], 1e-5).unwrap();
        for i in 0..2 {
            assert!((r.second_derivatives[i] - 2.0).abs() < 1e-6);
            assert!((r.std_devs[i].unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
        }
        assert!(r.off_diagonal(0, 1).abs() < 1e-6);
    }

    #[test]
    fn bilinear_mixed_partial() {
        let p = box2(|x| x[0] * x[1]);
        let r = curvature_diagnostics(&p, &[0.0, 0.0], 1e-5).unwrap();
        assert!((r.off_diagonal(0, 1) - 1.0).abs() < 1e-6);
        assert_eq!(r.off_diagonal(0, 1), r.off_diagonal(1, 0));
        assert!(r.std_devs.iter().all(Option::is_none));
    }

    #[test]
    fn at_bound_uses_one_sided_difference() {
        let p = box2(|x| 3.0 * x[0] * x[0] + x[1] * x[1]);
        let r = curvature_diagnostics(&p, &[5.0, -5.0], 1e-4).unwrap();
        assert!(
            (r.second_derivatives[0] - 6.0).abs() < 1e-3,
            "{:?}",
            r.second_derivatives
        );
        assert!((r.second_derivatives[1] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn concave_direction_flagged() {
        let p = box2(|x| -x[0] * x[0] + x[1] * x[1]);
        let r = curvature_diagnostics(&p, &[1.0, 1.0], 1e-5).unwrap();
        assert!(r.std_devs[0].is_none());
        assert!(r.std_devs[1].is_some());
    }
}
