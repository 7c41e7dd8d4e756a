use asa_core::distributions::{acceptance_probability, asa_cdf, asa_draw, ScaledStep, UnitUniform};
use asa_core::reanneal::rescale_parameter;
use asa_core::schedules::{asa_temperature, default_m, default_n, index_for_temperature};
use asa_core::{AcceptanceForm, AnnealIndex, ScheduleParams};
use proptest::prelude::*;

proptest! {
    #[test]
    fn draw_then_cdf_recovers_u(u in 0.0f64..=1.0, log_t in -6.0f64..=0.0) {
        let t = 10f64.powf(log_t);
        let y = asa_draw(UnitUniform::new(u).unwrap(), t).unwrap();
        prop_assert!((-1.0..=1.0).contains(&y.get()));
        let back = asa_cdf(y, t).unwrap().get();
        prop_assert!((back - u).abs() <= 1e-12);
    }

    #[test]
    fn cdf_is_monotone(a in -1.0f64..=1.0, b in -1.0f64..=1.0, log_t in -6.0f64..=0.0) {
        let t = 10f64.powf(log_t);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let g = |y| asa_cdf(ScaledStep::new(y).unwrap(), t).unwrap().get();
        prop_assert!(g(lo) <= g(hi));
    }

    #[test]
    fn acceptance_is_monotone_in_cost_increase(d1 in -50.0f64..50.0, d2 in -50.0f64..50.0, t in 1e-3f64..10.0) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        for form in [AcceptanceForm::MetropolisExp, AcceptanceForm::Logistic, AcceptanceForm::Tsallis { q: 1.5 }] {
            let a = acceptance_probability(lo, t, form).unwrap();
            let b = acceptance_probability(hi, t, form).unwrap();
            prop_assert!(a >= b, "{form:?}: {a} < {b}");
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn tsallis_approaches_metropolis(de in 0.0f64..5.0, t in 0.5f64..5.0) {
        let exact = acceptance_probability(de, t, AcceptanceForm::MetropolisExp).unwrap();
        let near = acceptance_probability(de, t, AcceptanceForm::Tsallis { q: 1.0 + 1e-7 }).unwrap();
        prop_assert!((near - exact).abs() < 1e-5);
    }

    #[test]
    fn schedule_inverse_round_trip(log_k in 0.0f64..6.0, q in 0.25f64..4.0, d in 1usize..8) {
        let p = ScheduleParams::new(1.0, default_m(), default_n(), q, d).unwrap();
        let k = 10f64.powf(log_k);
        prop_assume!(p.scale() * k.powf(p.exponent()) < 650.0);
        let t = asa_temperature(AnnealIndex::new(k).unwrap(), &p);
        let back = index_for_temperature(t, &p).unwrap().index.get();
        prop_assert!((back - k).abs() <= 1e-9 * k);
    }

    #[test]
    fn larger_quench_cools_faster_past_the_crossover(log_k in 2.1f64..5.0, d in 1usize..6) {
        // Every schedule passes e^-m at k = e^n = 100; beyond it larger Q is colder.
        let k = 10f64.powf(log_k);
        // Keep the coldest schedule above the temperature floor.
        prop_assume!(default_m() * (k / 100.0).powf(2.0 / d as f64) < 650.0);
        let k = AnnealIndex::new(k).unwrap();
        let t = |q| asa_temperature(k, &ScheduleParams::new(1.0, default_m(), default_n(), q, d).unwrap());
        prop_assert!(t(2.0) < t(1.0));
        prop_assert!(t(1.0) < t(0.5));
    }

    #[test]
    fn rescale_raises_temperature_by_ratio(log_t in -8.0f64..-1.0, ratio in 1.0f64..50.0) {
        let p = ScheduleParams::new(1.0, default_m(), default_n(), 1.0, 3).unwrap();
        let t = 10f64.powf(log_t);
        let (t_new, k) = rescale_parameter(t, ratio, &p);
        prop_assert!(t_new >= t);
        prop_assert!((t_new - (t * ratio).min(1.0)).abs() <= 1e-15 * t_new);
        let old_k = index_for_temperature(t, &p).unwrap().index.get();
        prop_assert!(k <= old_k);
    }
}
