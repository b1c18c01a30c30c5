use geac::equilibria::find_equilibria;
use geac::integrator::{integrate_with_events, EventKind, IntegratorOptions};
use geac::model::{PolynomialOscillator, State};
use proptest::prelude::*;

fn eq10(a0: f64) -> PolynomialOscillator {
    PolynomialOscillator::new(a0, vec![0.2649, -0.0503, -0.04414]).unwrap()
}

/// Classical fixed-step RK4, kept separate from the library integrator.
fn rk4_path(m: &PolynomialOscillator, y0: [f64; 2], h: f64, steps: usize) -> Vec<(f64, [f64; 2])> {
    let rhs = |y: [f64; 2]| [y[1], -m.damping() * y[1] - m.eval_f(y[0])];
    let mut out = vec![(0.0, y0)];
    let mut y = y0;
    for i in 0..steps {
        let k1 = rhs(y);
        let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
        for j in 0..2 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        out.push(((i + 1) as f64 * h, y));
    }
    out
}

#[test]
fn energy_conserved_over_one_oscillation() {
    let m = eq10(0.0);
    let init = State::new(0.0, 1.0, 0.0);
    let opts = IntegratorOptions {
        max_time: 60.0,
        ..Default::default()
    };
    let traj = integrate_with_events(&m, init, &opts).unwrap();
    let tps: Vec<_> = traj
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::TurningPoint)
        .collect();
    let period_end = tps[1].state.t;
    let e0 = m.total_energy(&init);
    let drift = traj
        .samples()
        .iter()
        .take_while(|s| s.t <= period_end)
        .map(|s| ((m.total_energy(s) - e0) / e0).abs())
        .fold(0.0, f64::max);
    assert!(drift <= 1e-8, "drift {drift}");
}

#[test]
fn fifth_order_convergence_on_fixed_steps() {
    let m = eq10(0.01);
    let init = State::new(0.0, 0.8, 0.2);
    let end = |h: f64| {
        let opts = IntegratorOptions {
            max_time: 8.0,
            fixed_step: Some(h),
            ..Default::default()
        };
        integrate_with_events(&m, init, &opts).unwrap().final_state()
    };
    let (a, b, c) = (end(0.4), end(0.2), end(0.1));
    let d1 = ((a.delta - b.delta).powi(2) + (a.omega - b.omega).powi(2)).sqrt();
    let d2 = ((b.delta - c.delta).powi(2) + (b.omega - c.omega).powi(2)).sqrt();
    let order = (d1 / d2).log2();
    assert!(order >= 4.0, "observed order {order}");
}

#[test]
fn turning_points_match_independent_rk4() {
    let m = eq10(0.02);
    let y0 = [1.2, -0.1];
    let opts = IntegratorOptions {
        max_time: 100.0,
        ..Default::default()
    };
    let traj = integrate_with_events(&m, State::new(0.0, y0[0], y0[1]), &opts).unwrap();

    let path = rk4_path(&m, y0, 1e-3, 100_000);
    let mut tp_times = Vec::new();
    let mut az_times = Vec::new();
    for w in path.windows(2) {
        let ((t0, a), (t1, b)) = (w[0], w[1]);
        if a[1].signum() != b[1].signum() {
            tp_times.push(t0 + (t1 - t0) * a[1] / (a[1] - b[1]));
        }
        let ga = -m.damping() * a[1] - m.eval_f(a[0]);
        let gb = -m.damping() * b[1] - m.eval_f(b[0]);
        if ga.signum() != gb.signum() {
            az_times.push(t0 + (t1 - t0) * ga / (ga - gb));
        }
    }
    let got_tp: Vec<f64> = traj
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::TurningPoint)
        .map(|e| e.state.t)
        .collect();
    let got_az: Vec<f64> = traj
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::AccelZero)
        .map(|e| e.state.t)
        .collect();
    assert_eq!(got_tp.len(), tp_times.len());
    assert_eq!(got_az.len(), az_times.len());
    for (a, b) in got_tp.iter().zip(&tp_times) {
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }
    for (a, b) in got_az.iter().zip(&az_times) {
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }
}

#[test]
fn damped_energy_is_non_increasing() {
    let m = eq10(0.05);
    let opts = IntegratorOptions {
        max_time: 150.0,
        ..Default::default()
    };
    let traj = integrate_with_events(&m, State::new(0.0, 1.5, 0.1), &opts).unwrap();
    let energies: Vec<f64> = traj.samples().iter().map(|s| m.total_energy(s)).collect();
    let scale = energies[0];
    for w in energies.windows(2) {
        assert!(w[1] <= w[0] + 10.0 * opts.rtol * scale, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn undamped_motion_is_reversible() {
    let m = eq10(0.0);
    let start = State::new(0.0, 0.9, -0.3);
    let opts = IntegratorOptions {
        max_time: 40.0,
        ..Default::default()
    };
    let there = integrate_with_events(&m, start, &opts).unwrap().final_state();
    // Reversing the velocity runs the conservative flow backwards in time.
    let flipped = State::new(0.0, there.delta, -there.omega);
    let back = integrate_with_events(&m, flipped, &opts).unwrap().final_state();
    assert!((back.delta - start.delta).abs() < 1e-6);
    assert!((-back.omega - start.omega).abs() < 1e-6);
}

#[test]
fn turning_points_have_zero_speed_and_crossings_sit_on_the_level() {
    let m = eq10(4.42e-4);
    let eq = find_equilibria(&m).unwrap();
    let opts = IntegratorOptions::for_equilibria(&m, &eq);
    let traj = integrate_with_events(&m, State::new(0.0, 0.0, 0.7), &opts).unwrap();
    for e in traj.events() {
        match e.kind {
            EventKind::TurningPoint => assert!(e.state.omega.abs() <= 1e-10),
            EventKind::UepCross => assert!((e.state.delta - e.level.unwrap()).abs() <= 1e-10),
            _ => {}
        }
    }
    assert!(traj.events().iter().any(|e| e.kind == EventKind::UepCross));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trajectory_structure(delta in -1.5f64..1.5, omega in -0.6f64..0.6, a0 in 0.0f64..0.1) {
        let m = eq10(a0);
        let eq = find_equilibria(&m).unwrap();
        let opts = IntegratorOptions { max_time: 40.0, ..IntegratorOptions::for_equilibria(&m, &eq) };
        let traj = integrate_with_events(&m, State::new(0.0, delta, omega), &opts).unwrap();
        let (t0, t1) = traj.span();
        for w in traj.samples().windows(2) {
            prop_assert!(w[1].t > w[0].t);
        }
        for e in traj.events() {
            prop_assert!(e.state.t >= t0 && e.state.t <= t1);
        }
        for w in traj.events().windows(2) {
            prop_assert!(w[1].state.t >= w[0].state.t);
        }
        prop_assert_eq!(traj.terminal_event().kind, traj.termination());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_sign_change_yields_one_event(delta in -1.5f64..1.5, omega in -0.8f64..0.8, a0 in 0.0f64..0.1) {
        let m = eq10(a0);
        let eq = find_equilibria(&m).unwrap();
        let opts = IntegratorOptions { max_time: 60.0, ..IntegratorOptions::for_equilibria(&m, &eq) };
        let traj = integrate_with_events(&m, State::new(0.0, delta, omega), &opts).unwrap();
        let count = |kind| traj.events().iter().filter(|e| e.kind == kind).count();
        let signs: Vec<f64> = traj.samples().iter().map(|s| s.omega).filter(|w| *w != 0.0).collect();
        let speed_flips = signs.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
        prop_assert_eq!(count(EventKind::TurningPoint), speed_flips);
        let accel: Vec<f64> = traj
            .samples()
            .iter()
            .map(|s| -m.damping() * s.omega - m.eval_f(s.delta))
            .filter(|a| *a != 0.0)
            .collect();
        let accel_flips = accel.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
        prop_assert_eq!(count(EventKind::AccelZero), accel_flips);
        let crossings: usize = opts
            .watched_levels
            .iter()
            .map(|l| {
                let side: Vec<f64> = traj.samples().iter().map(|s| s.delta - l).filter(|x| *x != 0.0).collect();
                side.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
            })
            .sum();
        prop_assert_eq!(count(EventKind::UepCross), crossings);
    }
}
