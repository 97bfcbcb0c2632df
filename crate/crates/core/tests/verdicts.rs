use potlab_core::capacity::{parabolicity, BallGrowth, Parabolicity};
use potlab_core::verdict::{
    classify_superharmonic, classify_unweighted, classify_weighted, Capacity, CapacityContext, CapacityFact, ParabolicityInput,
    Removable, SetDesc, CLAUSE_ZERO,
};
use proptest::prelude::*;

fn origin(n: usize) -> Vec<f64> {
    vec![0.0; n]
}

fn e1(n: usize, t: f64) -> Vec<f64> {
    let mut v = origin(n);
    v[0] = t;
    v
}

fn segment(n: usize) -> SetDesc {
    SetDesc::segment(e1(n, -0.5), e1(n, 0.5))
}

/// `(Ω, E)` pairs whose capacities the structural rules settle.
fn cases(n: usize) -> Vec<(SetDesc, SetDesc)> {
    let ball = SetDesc::open_ball(origin(n), 1.0);
    vec![
        (SetDesc::Whole, SetDesc::point(origin(n))),
        (ball.clone(), SetDesc::point(origin(n))),
        (
            SetDesc::Whole,
            SetDesc::Points {
                points: vec![origin(n), e1(n, 0.5)],
            },
        ),
        (ball.clone(), SetDesc::closed_ball(origin(n), 0.25)),
        (ball, SetDesc::Empty),
    ]
}

#[test]
fn weighted_classifier_agrees_with_unweighted_for_lebesgue_measure() {
    let mut seen = 0;
    for n in [2usize, 3] {
        for p in [1.5, n as f64, n as f64 + 1.0] {
            for (om, e) in cases(n) {
                let u = classify_unweighted(n, p, &om, &e, &[]).unwrap();
                let growth = ParabolicityInput::Growth(BallGrowth::PowerLaw { c: 1.0, d: n as f64 });
                let w = classify_weighted(&CapacityContext::unweighted(n, p), &growth, &om, &e, &[]).unwrap();
                assert_eq!(u.removable, w.removable, "n={n}, p={p}, Ω={om}, E={e}");
                seen += 1;
            }
        }
    }
    assert_eq!(seen, 30);
}

#[test]
fn structural_rules_are_dimension_thresholds() {
    for n in [2usize, 3, 4] {
        for p in [1.5, 2.0, 2.5, 3.0, 4.0, 5.0] {
            let v = classify_unweighted(n, p, &SetDesc::open_ball(origin(n), 1.0), &segment(n), &[]).unwrap();
            let want = if p > n as f64 - 1.0 { Removable::No } else { Removable::Unknown };
            assert_eq!(v.removable, want, "segment, n={n}, p={p}");
        }
    }
}

proptest! {
    #[test]
    fn parabolic_exactly_when_p_reaches_the_growth_exponent(c in 0.1..10.0f64, d in 1.0..6.0f64, p in 1.05..8.0f64) {
        let r = parabolicity(&BallGrowth::PowerLaw { c, d }, p).unwrap();
        let want = if p >= d { Parabolicity::Parabolic } else { Parabolicity::Hyperbolic };
        prop_assert_eq!(r.verdict, want);
    }

    #[test]
    fn numeric_evidence_never_certifies_zero(
        values in prop::collection::vec(1e-6..5.0f64, 3..6),
        floor in prop::option::of(1e-3..1.0f64),
        p in 1.2..2.0f64,
    ) {
        let seg = segment(3);
        let chain: Vec<(f64, f64)> = values.iter().enumerate().map(|(j, &v)| (2f64.powi(-(j as i32) - 3), v)).collect();
        let ctx = CapacityContext { numeric_floor: floor, ..CapacityContext::unweighted(3, p) };
        let facts = [CapacityFact::numeric(seg.clone(), chain)];
        let v = potlab_core::verdict::classify_unweighted_in(&ctx, &SetDesc::Whole, &seg, &facts).unwrap();
        prop_assert!(v.removable != Removable::Yes && v.clause != CLAUSE_ZERO);
        // Declaring the capacity never contradicts a numeric No.
        if v.removable == Removable::No {
            let d = [CapacityFact::declared(seg.clone(), Capacity::Positive)];
            prop_assert_eq!(classify_unweighted(3, p, &SetDesc::Whole, &seg, &d).unwrap().removable, Removable::No);
        }
    }

    #[test]
    fn superharmonic_verdicts_are_never_degenerate(
        n in 2usize..4,
        p in 1.1..6.0f64,
        which in 0usize..4,
        declared in prop::option::of(any::<bool>()),
    ) {
        let e = match which {
            0 => SetDesc::point(origin(n)),
            1 => segment(n),
            2 => SetDesc::closed_ball(origin(n), 0.5),
            _ => SetDesc::CountablePoints { label: "1/k".into() },
        };
        let facts: Vec<CapacityFact> = declared
            .map(|z| CapacityFact::declared(e.clone(), if z { Capacity::Zero } else { Capacity::Positive }))
            .into_iter()
            .collect();
        let v = classify_superharmonic(&CapacityContext::unweighted(n, p), &e, &facts).unwrap();
        prop_assert!(v.senses.iter().all(|&(_, r)| r != Removable::YesDegenerate));
        prop_assert!(v.senses.iter().all(|&(_, r)| r == v.verdict.removable));
    }

    #[test]
    fn declared_parabolicity_matches_growth(n in 2usize..5, p in 1.1..6.0f64) {
        let ctx = CapacityContext::unweighted(n, p);
        let om = SetDesc::Whole;
        let e = SetDesc::point(origin(n));
        let from_growth = classify_weighted(&ctx, &ParabolicityInput::Growth(BallGrowth::PowerLaw { c: 2.0, d: n as f64 }), &om, &e, &[]).unwrap();
        let verdict = if p >= n as f64 { Parabolicity::Parabolic } else { Parabolicity::Hyperbolic };
        let declared = classify_weighted(&ctx, &ParabolicityInput::Declared(verdict), &om, &e, &[]).unwrap();
        prop_assert_eq!(from_growth.removable, declared.removable);
    }
}
