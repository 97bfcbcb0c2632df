use std::sync::Arc;

use approx::assert_relative_eq;
use potlab_core::harmonic1d::{decide_removable_1d, fit_two_points, weak_extend, DecideOptions, PiecewiseHarmonic1D, RemovabilityStatus};
use potlab_core::quasi1d::{f_q_bound, q_after_reflections, reflect, reflection_factor, QuasiConstant};
use potlab_core::weights1d::{Density, Exponent, Interval, OpenSet1D, RelClosed1D, Weight1D};
use proptest::prelude::*;

fn exp(p: f64) -> Exponent {
    Exponent::new(p).unwrap()
}

fn q(v: f64) -> QuasiConstant {
    QuasiConstant::new(v).unwrap()
}

fn bound(qv: f64, p: f64, x: f64) -> f64 {
    f_q_bound(q(qv), exp(p), x).unwrap().value().expect("a = x is always feasible")
}

proptest! {
    #[test]
    fn reflection_is_odd_about_the_pivot(
        c in prop::collection::vec(-3.0..3.0f64, 1..5),
        pivot in -2.0..2.0f64,
        value in -5.0..5.0f64,
        t in 0.001..1.0f64,
        right in any::<bool>(),
    ) {
        let domain = if right { Interval::open(pivot, pivot + 1.0) } else { Interval::open(pivot - 1.0, pivot) };
        let r = reflect(Arc::new(move |x| c.iter().rev().fold(0.0, |a, k| a * x + k)), &domain, pivot, Some(value)).unwrap();
        let (a, b) = (r.eval(pivot + t), r.eval(pivot - t));
        prop_assert!((a + b - 2.0 * value).abs() <= 1e-9 * (1.0 + a.abs() + b.abs()));
        prop_assert_eq!(r.eval(pivot), value);
    }

    #[test]
    fn f_q_is_monotone_and_between_one_and_x(
        qv in 1.0..6.0f64,
        p in 1.1..5.0f64,
        x in 1.01..200.0f64,
        dx in 0.01..50.0f64,
        dq in 0.0..3.0f64,
    ) {
        let a = bound(qv, p, x);
        prop_assert!(a >= 1.0 && a <= x * (1.0 + 1e-9), "f_Q({x}) = {a}");
        prop_assert!(bound(qv, p, x + dx) >= a * (1.0 - 1e-9));
        prop_assert!(bound(qv + dq, p, x) <= a * (1.0 + 1e-9));
    }

    #[test]
    fn reflection_count_multiplies_the_constant(qv in 1.0..10.0f64, p in 1.1..6.0f64, n in 0u32..10) {
        let f = reflection_factor(exp(p));
        prop_assert!(f >= 2.0);
        prop_assert_eq!(q_after_reflections(q(qv), exp(p), n).get(), f.powi(n as i32) * qv);
    }

    #[test]
    fn tail_sets_are_removable_with_the_length_ratio(len in 0.5..10.0f64, frac in 0.05..0.95f64) {
        let a = len * frac;
        let om = OpenSet1D::single(Interval::open(0.0, len)).unwrap();
        let e = RelClosed1D::new(&om, vec![format!("[{a},{len})").parse().unwrap()], None).unwrap();
        let v = decide_removable_1d(&om, &e, &Weight1D::unweighted(exp(2.0)), &DecideOptions::default()).unwrap();
        prop_assert_eq!(v.status, RemovabilityStatus::Removable);
        assert_relative_eq!(v.constant.unwrap(), len / a, max_relative = 1e-12);
    }

    #[test]
    fn interior_segments_split_and_are_not_removable(a in 0.1..0.45f64, b in 0.55..0.9f64) {
        let om = OpenSet1D::single(Interval::open(0.0, 1.0)).unwrap();
        let e = RelClosed1D::new(&om, vec![Interval::closed(a, b)], None).unwrap();
        let v = decide_removable_1d(&om, &e, &Weight1D::unweighted(exp(3.0)), &DecideOptions::default()).unwrap();
        prop_assert_eq!(v.status, RemovabilityStatus::NonRemovableDisconnected);
        prop_assert!(v.witness.is_some());
    }

    #[test]
    fn weighted_extension_continues_the_same_function(
        alpha in -0.5..2.0f64,
        p in 1.3..4.0f64,
        u1 in -2.0..2.0f64,
        u2 in -2.0..2.0f64,
    ) {
        let w = Weight1D::new(Density::Pow(alpha), exp(p)).unwrap();
        let om = OpenSet1D::single(Interval::open(1.0, 3.0)).unwrap();
        let e = RelClosed1D::new(&om, vec!["[2,3)".parse().unwrap()], None).unwrap();
        let gap = Interval::open(1.0, 2.0);
        let f = fit_two_points(&w, &gap, (1.25, u1), (1.75, u2)).unwrap();
        let ext = weak_extend(&om, &e, &PiecewiseHarmonic1D::new(vec![(gap, f.clone())])).unwrap();
        for x in [1.1, 1.5, 1.9, 2.0, 2.5, 2.9] {
            assert_relative_eq!(ext.eval(x).unwrap(), f.eval(x).unwrap(), epsilon = 1e-10);
        }
    }
}

#[test]
fn martio_style_reflection_needs_one_step() {
    let om = OpenSet1D::single(Interval::open(-1.0, 1.0)).unwrap();
    let e = RelClosed1D::new(&om, vec!["(-1,0]".parse().unwrap()], None).unwrap();
    let ext = potlab_core::quasi1d::extend_quasi_1d(&om, &e, Arc::new(|t| t), q(1.0), exp(2.0)).unwrap();
    assert_eq!(ext.q_prime.get(), 2.0);
    assert_relative_eq!(ext.eval(-0.5).unwrap(), -0.5, epsilon = 1e-12);
}
