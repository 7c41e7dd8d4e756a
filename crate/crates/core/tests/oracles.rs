//! Benchmark functions checked against independently computed values.

use approx::assert_relative_eq;
use asa_core::testfns::{corana, shubert, SHUBERT_MINIMIZERS, SHUBERT_MINIMUM};

fn cosine_sum(x: f64) -> f64 {
    let mut s = 0.0;
    for j in 1..=5 {
        let j = j as f64;
        s += j * ((j + 1.0) * x + j).cos();
    }
    s
}

/// Golden-section refinement of a 1-D extremum of `cosine_sum` in `[a, b]`.
fn refine(mut a: f64, mut b: f64, sign: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let f = |x: f64| sign * cosine_sum(x);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

/// Global extrema of the cosine sum on [-10, 10], found by a fine scan.
fn extrema(sign: f64) -> (f64, Vec<f64>) {
    let n = 200_000;
    let h = 20.0 / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| -10.0 + i as f64 * h).collect();
    let mut locals = Vec::new();
    for i in 1..n {
        let (a, b, c) = (
            sign * cosine_sum(xs[i - 1]),
            sign * cosine_sum(xs[i]),
            sign * cosine_sum(xs[i + 1]),
        );
        if b <= a && b <= c {
            locals.push(refine(xs[i - 1], xs[i + 1], sign));
        }
    }
    let best = locals
        .iter()
        .map(|&x| sign * cosine_sum(x))
        .fold(f64::INFINITY, f64::min);
    let at_best: Vec<f64> = locals
        .into_iter()
        .filter(|&x| sign * cosine_sum(x) - best < 1e-9)
        .collect();
    (sign * best, at_best)
}

#[test]
fn shubert_has_eighteen_global_minimizers() {
    let (lo, at_lo) = extrema(1.0);
    let (hi, at_hi) = extrema(-1.0);
    assert_eq!(at_lo.len(), 3);
    assert_eq!(at_hi.len(), 3);
    let minimum = lo * hi;
    assert!((minimum - SHUBERT_MINIMUM).abs() < 1e-4, "{minimum}");

    // A global minimizer pairs a minimum of one factor with a maximum of the other.
    let mut count = 0;
    for &a in &at_lo {
        for &b in &at_hi {
            assert_relative_eq!(shubert(&[a, b]), minimum, max_relative = 1e-12);
            assert_relative_eq!(shubert(&[b, a]), minimum, max_relative = 1e-12);
            count += 2;
        }
    }
    assert_eq!(count, SHUBERT_MINIMIZERS);
}

#[test]
fn corana_hand_values() {
    assert_eq!(corana(&[0.0; 4]), 0.0);
    assert_eq!(corana(&[0.03, -0.04, 0.049, -0.01]), 0.0);
    assert_relative_eq!(corana(&[0.1, 0.0, 0.0, 0.0]), 0.01, max_relative = 1e-12);
    assert_relative_eq!(corana(&[0.0, 0.3, 0.0, 0.0]), 90.0, max_relative = 1e-12);
    // Plateau around 1.0: 0.15 * 0.95^2 * d_i.
    assert_relative_eq!(corana(&[1.0, 0.0, 0.0, 0.0]), 0.135375, max_relative = 1e-12);
    assert_relative_eq!(corana(&[0.0, 0.0, 1.02, 0.0]), 1.35375, max_relative = 1e-12);
    assert_relative_eq!(corana(&[0.0, 0.0, 0.0, -0.98]), 13.5375, max_relative = 1e-12);
}

#[test]
fn corana_plateau_is_open_and_symmetric() {
    assert!(corana(&[0.05, 0.0, 0.0, 0.0]) > 0.0);
    for x in [0.07, 0.3, 1.234, 57.3, 9999.0] {
        for i in 0..4 {
            let mut p = [0.0; 4];
            p[i] = x;
            let pos = corana(&p);
            p[i] = -x;
            assert_eq!(pos, corana(&p));
            assert!(pos > 0.0);
        }
    }
}

#[test]
fn corana_plateaus_are_flat() {
    for centre in [0.2, 0.4, 2.0, 10.0] {
        let a = corana(&[0.0, 0.0, centre - 0.04, 0.0]);
        let b = corana(&[0.0, 0.0, centre + 0.04, 0.0]);
        assert_eq!(a, b);
    }
}
