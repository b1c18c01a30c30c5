use geac::equilibria::{find_equilibria, EquilibriumKind};
use geac::model::{Direction, PolynomialOscillator, State};
use geac::oracle::{oracle_classify, Classification, OracleOptions};
use geac::swing::{assess_post_fault, AssessmentOptions, SwingVerdict};
use proptest::prelude::*;

/// `f(δ) = a1·δ·∏(1 − δ/r_i)`, so `f'(0) = a1` and the roots are `0, r_i`.
fn from_roots(a1: f64, roots: &[f64]) -> PolynomialOscillator {
    let mut poly = vec![a1];
    for &r in roots {
        let mut next = vec![0.0; poly.len() + 1];
        for (k, c) in poly.iter().enumerate() {
            next[k] += c;
            next[k + 1] -= c / r;
        }
        poly = next;
    }
    PolynomialOscillator::new(0.0, poly).unwrap()
}

fn separated_roots() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0.3f64..4.0, any::<bool>()), 1..5).prop_filter_map("roots too close", |v| {
        let mut r: Vec<f64> = v.into_iter().map(|(m, neg)| if neg { -m } else { m }).collect();
        r.sort_by(f64::total_cmp);
        r.windows(2).all(|w| w[1] - w[0] > 0.1).then_some(r)
    })
}

#[test]
fn smib_approximant_equilibria() {
    let m = PolynomialOscillator::new(4.42e-4, vec![0.2649, -0.0503, -0.04414]).unwrap();
    let eq = find_equilibria(&m).unwrap();
    let left = eq.left_uep.unwrap();
    let right = eq.right_uep.unwrap();
    assert!((left.location + 3.0849332938).abs() < 1e-9);
    assert!((right.location - 1.9453773355).abs() < 1e-9);
    assert!((left.slope + 0.68497).abs() < 1e-5);
    assert!((right.slope + 0.43195).abs() < 1e-5);
    assert!((m.potential_energy(left.location) - 0.7533129984).abs() < 1e-9);
    assert!((m.potential_energy(right.location) - 0.2197678788).abs() < 1e-9);
}

#[test]
fn modified_oscillator_equilibria() {
    let m = PolynomialOscillator::new(4.42e-4, vec![0.2649, -0.0603, -0.04414]).unwrap();
    let eq = find_equilibria(&m).unwrap();
    assert!((eq.left_uep.unwrap().location + 3.2262648756).abs() < 1e-9);
    assert!((eq.right_uep.unwrap().location - 1.8601570369).abs() < 1e-9);
    assert!((m.potential_energy(eq.left_uep.unwrap().location) - 0.8580688152).abs() < 1e-9);
    assert!((m.potential_energy(eq.right_uep.unwrap().location) - 0.1968073567).abs() < 1e-9);
}

proptest! {
    #[test]
    fn every_chosen_root_is_recovered(a1 in 0.1f64..3.0, roots in separated_roots()) {
        let m = from_roots(a1, &roots);
        let eq = find_equilibria(&m).unwrap();
        let found: Vec<f64> = eq.all.iter().map(|e| e.location).collect();
        prop_assert_eq!(found.len(), roots.len() + 1, "{:?} vs {:?}", found, roots);
        for r in roots.iter().chain(std::iter::once(&0.0)) {
            let hit = found.iter().any(|x| (x - r).abs() <= 1e-9 * r.abs().max(1.0));
            prop_assert!(hit, "root {} missing from {:?}", r, found);
        }
    }

    #[test]
    fn simple_roots_alternate_in_kind(a1 in 0.1f64..3.0, roots in separated_roots()) {
        let eq = find_equilibria(&from_roots(a1, &roots)).unwrap();
        for w in eq.all.windows(2) {
            prop_assert!(!(w[0].kind == EquilibriumKind::Sep && w[1].kind == EquilibriumKind::Sep));
            prop_assert!(!(w[0].kind == EquilibriumKind::Uep && w[1].kind == EquilibriumKind::Uep));
        }
        prop_assert_eq!(eq.sep.location, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// With no forward barrier, forward swings are never judged unstable,
    /// and the oracle never sees an escape to the right.
    #[test]
    fn no_forward_barrier_means_no_forward_instability(
        a2 in 0.1f64..0.6, a0 in 0.0f64..0.05, d in -1.0f64..1.0, w in -1.5f64..1.5,
    ) {
        let m = PolynomialOscillator::new(a0, vec![1.0, a2]).unwrap();
        let eq = find_equilibria(&m).unwrap();
        prop_assert!(eq.right_uep.is_none());
        prop_assume!(eq.in_well(d));
        let opts = AssessmentOptions { max_time: 60.0, max_swings: 10, ..Default::default() };
        let report = assess_post_fault(&m, State::new(0.0, d, w), &opts).unwrap();
        for r in &report.records {
            if r.swing.direction == Direction::Forward {
                prop_assert_ne!(r.verdict, SwingVerdict::Unstable);
            }
        }
        let v = oracle_classify(&m, &eq, State::new(0.0, d, w), &OracleOptions { max_time: 60.0, ..Default::default() }).unwrap();
        if v.classification == Classification::Unstable {
            prop_assert!(v.first_escape_event.unwrap().state.delta < 0.0);
        }
    }
}
