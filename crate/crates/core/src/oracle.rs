//! Brute-force time-domain classification and stability-boundary bisection.

use serde::{Deserialize, Serialize};

use crate::equilibria::{find_equilibria, EquilibriumSet};
use crate::error::{GeacError, Result};
use crate::integrator::{integrate_with_events, Event, EventKind, IntegratorOptions, Trajectory};
use crate::model::{PolynomialOscillator, State, SwingDynamics};
use crate::swing::{analyze, energy_floor, AssessmentOptions, OverallVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Stable,
    Unstable,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub classification: Classification,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_escape_event: Option<Event>,
    /// Swing (counted from 1) during which the escape happened.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escape_swing: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_parameter: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_time: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_time: 400.0,
        }
    }
}

/// Integrates over the whole horizon and reads the verdict off the path.
///
/// Unstable when the escape bound is hit or a UEP is crossed with kinetic
/// energy above the convergence floor. Stable when the convergence criterion
/// is met, or when the horizon ends inside the well with less energy than
/// the lowest barrier.
pub fn oracle_classify<D: SwingDynamics>(
    model: &D,
    eq: &EquilibriumSet,
    init: State,
    options: &OracleOptions,
) -> Result<OracleVerdict> {
    let floor = energy_floor(model, eq);
    let opts = IntegratorOptions {
        rtol: options.rtol,
        atol: options.atol,
        max_time: options.max_time,
        ..IntegratorOptions::for_equilibria(model, eq)
    };
    let traj = integrate_with_events(model, init, &opts)?;
    let verdict = |classification, event: Option<Event>| OracleVerdict {
        classification,
        first_escape_event: event,
        escape_swing: event.map(|e| swing_of(&traj, e.state.t)),
        critical_parameter: None,
    };

    let escape = traj.events().iter().copied().find(|e| match e.kind {
        EventKind::Escape => true,
        EventKind::UepCross => e.state.kinetic_energy() > floor,
        _ => false,
    });
    if escape.is_some() {
        return Ok(verdict(Classification::Unstable, escape));
    }
    if traj.termination() == EventKind::Converged {
        return Ok(verdict(Classification::Stable, None));
    }
    let end = traj.final_state();
    let lowest_barrier = [eq.left_uep, eq.right_uep]
        .iter()
        .flatten()
        .map(|u| model.potential(u.location))
        .fold(f64::INFINITY, f64::min);
    if eq.in_well(end.delta) && model.total_energy(end.delta, end.omega) < lowest_barrier {
        return Ok(verdict(Classification::Stable, None));
    }
    Ok(verdict(Classification::Undecided, None))
}

fn swing_of(traj: &Trajectory, t: f64) -> usize {
    1 + traj
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::TurningPoint && e.state.t < t)
        .count()
}

/// Shrinks `[lo, hi]` around the point where `is_stable` changes value,
/// until its width is at most `tol`. Returns the final bracket.
pub fn bisect_boundary(
    lo: f64,
    hi: f64,
    tol: f64,
    mut is_stable: impl FnMut(f64) -> Result<bool>,
) -> Result<(f64, f64)> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(GeacError::InvalidOptions("bisection needs lo < hi and tol > 0".into()));
    }
    let (mut a, mut b) = (lo, hi);
    let at_a = is_stable(a)?;
    if is_stable(b)? == at_a {
        return Err(GeacError::SameVerdictAtEndpoints(format!(
            "{} at both {lo} and {hi}",
            if at_a { "stable" } else { "unstable" }
        )));
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if is_stable(mid)? == at_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok((a, b))
}

/// What is being bisected on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryCriterion {
    /// Whether the trajectory ever escapes.
    Overall,
    /// Whether it escapes within the first `k` swings.
    Swing(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub value: f64,
    pub bracket: (f64, f64),
    /// GEAC margin at `value`: of swing `k` for [`BoundaryCriterion::Swing`],
    /// the minimum otherwise. `None` when that swing was never scored.
    pub margin: Option<f64>,
    /// Whether `margin` is within `1e−3` of zero.
    pub cross_validated: bool,
}

/// Bisects a one-parameter family of initial states on the oracle verdict.
pub fn bisect_critical(
    model: &PolynomialOscillator,
    family: impl Fn(f64) -> State,
    interval: (f64, f64),
    criterion: BoundaryCriterion,
    options: &OracleOptions,
) -> Result<CriticalPoint> {
    let eq = find_equilibria(model)?;
    let (lo, hi) = interval;
    let tol = 1e-6 * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let bracket = bisect_boundary(lo, hi, tol, |c| {
        let v = oracle_classify(model, &eq, family(c), options)?;
        Ok(match criterion {
            BoundaryCriterion::Overall => v.classification != Classification::Unstable,
            BoundaryCriterion::Swing(k) => v.escape_swing.is_none_or(|s| s > k),
        })
    })?;
    let value = 0.5 * (bracket.0 + bracket.1);
    let assess = AssessmentOptions {
        rtol: options.rtol,
        atol: options.atol,
        max_time: options.max_time,
        ..Default::default()
    };
    let report = analyze(model, family(value), &assess)?.report;
    let margin = match criterion {
        BoundaryCriterion::Overall => Some(report.min_margin).filter(|m| m.is_finite()),
        BoundaryCriterion::Swing(k) => report.records.get(k.wrapping_sub(1)).map(|r| r.margin),
    };
    let cross_validated = margin.is_some_and(|m| m.abs() <= 1e-3);
    Ok(CriticalPoint {
        value,
        bracket,
        margin,
        cross_validated,
    })
}

impl From<OverallVerdict> for Classification {
    fn from(v: OverallVerdict) -> Self {
        match v {
            OverallVerdict::Stable => Classification::Stable,
            OverallVerdict::Unstable => Classification::Unstable,
            OverallVerdict::Undecided => Classification::Undecided,
        }
    }
}
