use geac::equilibria::find_equilibria;
use geac::integrator::EventKind;
use geac::model::{Direction, PolynomialOscillator, State};
use geac::online::OnlineAssessor;
use geac::oracle::{oracle_classify, Classification, OracleOptions};
use geac::swing::{analyze, assess_post_fault, AssessmentOptions, OverallVerdict, SwingRecord, SwingVerdict};
use proptest::prelude::*;

fn eq10(a0: f64) -> PolynomialOscillator {
    PolynomialOscillator::new(a0, vec![0.2649, -0.0503, -0.04414]).unwrap()
}

const V_LEFT: f64 = 0.7533129984;
const V_RIGHT: f64 = 0.2197678788;

fn check_records(records: &[SwingRecord], expected: &[(char, f64, f64)]) {
    assert!(records.len() >= expected.len());
    for (r, &(dir, a_acc, margin)) in records.iter().zip(expected) {
        assert_eq!(r.swing.direction.letter(), dir);
        assert!((r.a_acc - a_acc).abs() <= 1e-7 * a_acc, "a_acc {} vs {a_acc}", r.a_acc);
        assert!(
            (r.margin - margin).abs() <= 1e-6 * margin,
            "margin {} vs {margin}",
            r.margin
        );
    }
}

/// Values from an independent eighth-order integration at rtol 1e-13.
#[test]
fn lightly_damped_margins_match_reference_integration() {
    let r = assess_post_fault(
        &eq10(4.42e-4),
        State::new(0.0, 0.13, -0.3),
        &AssessmentOptions::default(),
    )
    .unwrap();
    check_records(
        &r.records,
        &[
            ('B', 0.047180938, 14.96779067),
            ('F', 0.047056370, 3.67172625),
            ('B', 0.046923299, 15.05545701),
            ('F', 0.046799407, 3.69736935),
        ],
    );
    assert_eq!(r.overall, OverallVerdict::Stable);
}

#[test]
fn damped_margins_match_reference_integration() {
    let r = assess_post_fault(&eq10(0.05), State::new(0.0, 0.13, -0.6), &AssessmentOptions::default()).unwrap();
    check_records(
        &r.records,
        &[
            ('B', 0.180024321, 3.32775938),
            ('F', 0.133455223, 0.80503026),
            ('B', 0.095302174, 7.04756141),
            ('F', 0.070673320, 2.26265496),
        ],
    );
}

#[test]
fn literal_clearance_state_escapes_backward() {
    let r = assess_post_fault(
        &eq10(4.42e-4),
        State::new(0.0, 0.13, -8.3315),
        &AssessmentOptions::default(),
    )
    .unwrap();
    assert_eq!(r.overall, OverallVerdict::Unstable);
    assert_eq!(r.records.len(), 1);
    assert_eq!(r.records[0].swing.end.kind, EventKind::UepCross);
    assert_eq!(r.records[0].swing.direction, Direction::Backward);
}

#[test]
fn one_undamped_period_has_two_swings() {
    let m = eq10(0.0);
    let a = analyze(&m, State::new(0.0, 0.5, 0.0), &AssessmentOptions::default()).unwrap();
    let r = &a.report;
    assert_eq!(r.overall, OverallVerdict::Stable);
    assert_eq!(r.records[0].swing.direction, Direction::Backward);
    assert_eq!(r.records[1].swing.direction, Direction::Forward);
    let tps = a
        .trajectory
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::TurningPoint)
        .count();
    assert!(tps >= 2);
}

#[test]
fn first_swing_margin_falls_through_zero_at_the_barrier_energy() {
    let m = eq10(0.0);
    let d0 = 0.13;
    let critical = (2.0 * (V_RIGHT - m.potential_energy(d0))).sqrt();
    let first = |w: f64| {
        let opts = AssessmentOptions {
            max_swings: 1,
            ..Default::default()
        };
        assess_post_fault(&m, State::new(0.0, d0, w), &opts).unwrap().records[0].margin
    };
    let speeds: Vec<f64> = (1..=12).map(|i| critical * (0.4 + 0.1 * i as f64)).collect();
    let margins: Vec<f64> = speeds.iter().map(|&w| first(w)).collect();
    for w in margins.windows(2) {
        assert!(w[1] < w[0], "{margins:?}");
    }
    assert!(first(critical * (1.0 - 1e-4)) > 0.0);
    assert!(first(critical * (1.0 + 1e-4)) < 0.0);
    // Starting right of the SEP the swing decelerates from the outset, so
    // A_acc = ½Δω0² and the margin is (V3 − E)/A_acc on both sides.
    for &w in &speeds {
        let e = 0.5 * w * w + m.potential_energy(d0);
        assert!((first(w) - (V_RIGHT - e) / (0.5 * w * w)).abs() < 1e-7, "{w}");
    }
}

fn oracle_agrees(m: &PolynomialOscillator, d: f64, w: f64) -> Result<(), TestCaseError> {
    let eq = find_equilibria(m).unwrap();
    let init = State::new(0.0, d, w);
    let geac = assess_post_fault(m, init, &AssessmentOptions::default()).unwrap();
    let oracle = oracle_classify(m, &eq, init, &OracleOptions::default()).unwrap();
    prop_assert_eq!(
        Classification::from(geac.overall),
        oracle.classification,
        "({}, {})",
        d,
        w
    );
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn undamped_verdicts_agree_with_the_oracle(d in -1.0f64..1.0, w in -1.4f64..0.8) {
        let m = eq10(0.0);
        let e = 0.5 * w * w + m.potential_energy(d);
        prop_assume!((e - V_LEFT).abs() > 1e-6 && (e - V_RIGHT).abs() > 1e-6);
        oracle_agrees(&m, d, w)?;
    }

    #[test]
    fn damped_verdicts_agree_with_the_oracle(d in -1.0f64..1.0, w in -1.4f64..0.8, a0 in 0.005f64..0.1) {
        let m = eq10(a0);
        let geac = assess_post_fault(&m, State::new(0.0, d, w), &AssessmentOptions::default()).unwrap();
        // Near-critical runs sit inside the exclusion band.
        prop_assume!(geac.records.iter().all(|r| r.margin.abs() > 1e-6));
        oracle_agrees(&m, d, w)?;
    }

    #[test]
    fn negative_margin_iff_uep_crossed_with_speed(d in -1.0f64..1.0, w in -1.6f64..1.2, a0 in 0.0f64..0.1) {
        let r = assess_post_fault(&eq10(a0), State::new(0.0, d, w), &AssessmentOptions::default()).unwrap();
        for rec in &r.records {
            let crossed = rec.swing.end.kind == EventKind::UepCross && rec.swing.end.state.omega != 0.0;
            prop_assert_eq!(rec.margin < 0.0, crossed);
            prop_assert_eq!(rec.verdict == SwingVerdict::Unstable, rec.swing.end.kind == EventKind::UepCross);
            if rec.verdict == SwingVerdict::Stable {
                prop_assert!(rec.margin >= 0.0);
            }
        }
    }

    /// Runs start heading through the SEP, as a clearance state does.
    #[test]
    fn damped_margins_grow_within_each_direction(d in -0.8f64..0.8, speed in 0.0f64..0.7, a0 in 0.01f64..0.1) {
        let w = -d.signum() * speed;
        let r = assess_post_fault(&eq10(a0), State::new(0.0, d, w), &AssessmentOptions::default()).unwrap();
        prop_assume!(r.overall == OverallVerdict::Stable);
        for dir in [Direction::Forward, Direction::Backward] {
            let m: Vec<f64> = r.records.iter().filter(|x| x.swing.direction == dir).map(|x| x.margin).collect();
            for pair in m.windows(2) {
                prop_assert!(pair[1] >= pair[0], "{:?}", m);
            }
        }
    }
}

/// Largest relative margin error of the streamed records against the
/// offline ones over the first `swings` swings.
fn streamed_error(m: &PolynomialOscillator, init: State, rate: f64, swings: usize) -> f64 {
    let a = analyze(m, init, &AssessmentOptions::default()).unwrap();
    let (t0, t1) = a.trajectory.span();
    let mut online = OnlineAssessor::new(m.clone()).unwrap();
    let mut streamed = Vec::new();
    let n = ((t1 - t0) * rate) as usize;
    for i in 0..=n {
        let s = a.trajectory.interpolate_state(t0 + i as f64 / rate).unwrap();
        if let Some(r) = online.push_sample(s.t, s.delta, s.omega).unwrap() {
            streamed.push(r);
        }
    }
    assert!(streamed.len() >= swings && a.report.records.len() >= swings);
    a.report
        .records
        .iter()
        .zip(&streamed)
        .take(swings)
        .map(|(off, on)| {
            assert_eq!(off.swing.direction, on.swing.direction);
            assert_eq!(off.verdict, on.verdict);
            ((off.margin - on.margin) / off.margin).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn streaming_matches_offline_at_100_hz() {
    let m = eq10(0.02);
    let err = streamed_error(&m, State::new(0.0, 0.13, -0.5), 100.0, 8);
    assert!(err <= 1e-3, "relative error {err}");
}

#[test]
fn streaming_error_shrinks_with_sampling_rate() {
    let m = eq10(0.02);
    let init = State::new(0.0, 0.13, -0.5);
    let errs: Vec<f64> = [10.0, 40.0, 160.0]
        .iter()
        .map(|&r| streamed_error(&m, init, r, 6))
        .collect();
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn streaming_flags_the_escape() {
    let m = eq10(0.0);
    let a = analyze(&m, State::new(0.0, 0.0, -1.0), &AssessmentOptions::default()).unwrap();
    let mut online = OnlineAssessor::new(m).unwrap();
    let (t0, t1) = a.trajectory.span();
    let mut last = None;
    for i in 0..=((t1 - t0) * 200.0) as usize {
        let s = a.trajectory.interpolate_state(t0 + i as f64 / 200.0).unwrap();
        if let Some(r) = online.push_sample(s.t, s.delta, s.omega).unwrap() {
            last = Some(r);
        }
    }
    let last = last.unwrap();
    assert_eq!(last.verdict, SwingVerdict::Unstable);
    assert_eq!(last.swing.index, 2);
    assert!(online.is_finished());
}
