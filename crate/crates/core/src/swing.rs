//! Swing segmentation and per-swing stability margins.
//!
//! A swing runs between two adjacent turning points. For each one the
//! acceleration area is the peak kinetic energy reached inside the swing
//! (see [`FirstSwingArea`] for the first one) and
//!
//! * a swing that turns at `δ_r` is stable with margin `A_sur / A_acc`,
//!   `A_sur = V(δ_uep) − V(δ_r)`;
//! * a swing that crosses its bounding UEP with residual speed `Δω_x` is
//!   unstable with margin `(A_dec − A_acc) / A_acc = −½Δω_x² / A_acc`.

use serde::{Deserialize, Serialize};

use crate::equilibria::{escape_possible, find_equilibria, EquilibriumSet};
use crate::error::{GeacError, Result};
use crate::integrator::{integrate_with_events, Event, EventKind, IntegratorOptions, Trajectory};
use crate::model::{kinetic_energy, Direction, PolynomialOscillator, State, SwingDynamics};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Swing {
    /// 1-based.
    pub index: usize,
    pub direction: Direction,
    pub start: Event,
    pub end: Event,
    /// State of maximum kinetic energy inside the swing.
    pub peak_ke_state: State,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SwingVerdict {
    Stable,
    Unstable,
    NeverUnstableThisDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OverallVerdict {
    Stable,
    Unstable,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwingRecord {
    pub swing: Swing,
    pub a_acc: f64,
    pub a_dec: f64,
    /// Surplus area; only for swings that turned inside the well.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_sur: Option<f64>,
    /// `+∞` when the swing cannot lose stability.
    pub margin: f64,
    pub verdict: SwingVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub overall: OverallVerdict,
    pub min_margin: f64,
    pub terminating_event: EventKind,
    #[serde(default)]
    pub records: Vec<SwingRecord>,
}

/// Acceleration area of the first swing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstSwingArea {
    /// Peak kinetic energy of the swing, never below the energy at clearance.
    #[default]
    PeakKinetic,
    /// Kinetic energy at clearance only, as when the fault-on model is
    /// unknown. Coincides with the fault-on acceleration area of the
    /// classical criterion even when clearance precedes the post-fault SEP.
    AtClearance,
}

/// Knobs for [`assess_post_fault`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssessmentOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_time: f64,
    pub max_swings: usize,
    pub first_swing_area: FirstSwingArea,
}

impl Default for AssessmentOptions {
    fn default() -> Self {
        AssessmentOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_time: 200.0,
            max_swings: 50,
            first_swing_area: FirstSwingArea::PeakKinetic,
        }
    }
}

impl AssessmentOptions {
    pub fn integrator_options<D: SwingDynamics>(&self, model: &D, eq: &EquilibriumSet) -> IntegratorOptions {
        IntegratorOptions {
            rtol: self.rtol,
            atol: self.atol,
            max_time: self.max_time,
            ..IntegratorOptions::for_equilibria(model, eq)
        }
    }
}

/// Kinetic energy below which a swing counts as converged.
pub fn energy_floor<D: SwingDynamics>(model: &D, eq: &EquilibriumSet) -> f64 {
    IntegratorOptions::for_equilibria(model, eq)
        .convergence
        .map_or(0.0, |c| c.energy)
}

/// Acceleration area of the first swing when only the clearing speed is known.
pub fn first_acc_area(omega_tc: f64) -> f64 {
    kinetic_energy(omega_tc)
}

/// Splits a trajectory into swings at its turning points.
///
/// The first swing starts at the initial state; its direction is the sign
/// of the first non-zero speed. A swing ends at the next turning point, at a
/// crossing of a watched level in its direction of motion, or where the
/// integration stopped.
pub fn segment_swings(traj: &Trajectory) -> Vec<Swing> {
    let init = traj.initial();
    let Some(mut direction) = traj.samples().iter().find_map(|s| Direction::of_speed(s.omega)) else {
        return Vec::new();
    };
    let mut start = Event {
        kind: EventKind::Start,
        state: init,
        direction: Some(direction),
        level: None,
    };
    let mut peak = init;
    let mut swings = Vec::new();

    for e in traj.events() {
        let close = match e.kind {
            EventKind::AccelZero => {
                if e.state.kinetic_energy() > peak.kinetic_energy() {
                    peak = e.state;
                }
                false
            }
            EventKind::TurningPoint => true,
            EventKind::UepCross => e.direction == Some(direction),
            EventKind::Escape | EventKind::Converged | EventKind::TimeLimit => true,
            EventKind::Start => false,
        };
        if !close {
            continue;
        }
        swings.push(Swing {
            index: swings.len() + 1,
            direction,
            start,
            end: *e,
            peak_ke_state: peak,
        });
        if e.kind != EventKind::TurningPoint {
            break;
        }
        direction = e.direction.map_or(direction.reversed(), Direction::reversed);
        start = Event {
            direction: Some(direction),
            ..*e
        };
        peak = e.state;
    }
    swings
}

/// Scores one swing.
pub fn swing_margin(model: &PolynomialOscillator, eq: &EquilibriumSet, swing: &Swing) -> Result<SwingRecord> {
    swing_margin_with_area(model, eq, swing, swing.peak_ke_state.kinetic_energy())
}

/// Scores one swing against a given acceleration area.
pub fn swing_margin_with_area(
    model: &PolynomialOscillator,
    eq: &EquilibriumSet,
    swing: &Swing,
    a_acc: f64,
) -> Result<SwingRecord> {
    if swing.end.kind == EventKind::TimeLimit || swing.end.kind == EventKind::Start {
        return Err(GeacError::UnresolvedSwing(swing.index));
    }
    let record = |a_dec, a_sur, margin, verdict| SwingRecord {
        swing: *swing,
        a_acc,
        a_dec,
        a_sur,
        margin,
        verdict,
    };
    if a_acc <= energy_floor(model, eq) {
        return Ok(record(a_acc, None, f64::INFINITY, SwingVerdict::Stable));
    }
    let uep = eq
        .bounding_uep(swing.direction)
        .filter(|u| escape_possible(model, u).unwrap_or(false));
    let Some(uep) = uep else {
        return Ok(record(
            a_acc,
            None,
            f64::INFINITY,
            SwingVerdict::NeverUnstableThisDirection,
        ));
    };
    let barrier = model.potential_energy(uep.location);
    let end = swing.end.state;
    Ok(match swing.end.kind {
        EventKind::TurningPoint => {
            let a_sur = barrier - model.potential_energy(end.delta);
            record(a_acc, Some(a_sur), a_sur / a_acc, SwingVerdict::Stable)
        }
        EventKind::Converged => {
            // The swing would turn where V equals the remaining energy.
            let a_sur = barrier - model.total_energy(&end);
            record(a_acc, Some(a_sur), a_sur / a_acc, SwingVerdict::Stable)
        }
        _ => {
            let residual = end.kinetic_energy();
            record(a_acc - residual, None, -residual / a_acc, SwingVerdict::Unstable)
        }
    })
}

/// Output of [`analyze`]: the report together with what produced it.
#[derive(Debug, Clone)]
pub struct Assessment {
    pub report: AssessmentReport,
    pub trajectory: Trajectory,
    pub equilibria: EquilibriumSet,
}

/// Swing-by-swing assessment of the post-fault system from the state at
/// fault clearance.
pub fn assess_post_fault(
    model: &PolynomialOscillator,
    init: State,
    options: &AssessmentOptions,
) -> Result<AssessmentReport> {
    analyze(model, init, options).map(|a| a.report)
}

pub fn analyze(model: &PolynomialOscillator, init: State, options: &AssessmentOptions) -> Result<Assessment> {
    let eq = find_equilibria(model)?;
    if !eq.in_well(init.delta) {
        return Err(GeacError::OutsideWell(init.delta));
    }
    let traj = integrate_with_events(model, init, &options.integrator_options(model, &eq))?;
    let report = score(model, &eq, &traj, options)?;
    Ok(Assessment {
        report,
        trajectory: traj,
        equilibria: eq,
    })
}

fn score(
    model: &PolynomialOscillator,
    eq: &EquilibriumSet,
    traj: &Trajectory,
    options: &AssessmentOptions,
) -> Result<AssessmentReport> {
    let mut records = Vec::new();
    for swing in segment_swings(traj).into_iter().take(options.max_swings) {
        let a_acc = match options.first_swing_area {
            FirstSwingArea::AtClearance if swing.index == 1 => first_acc_area(traj.initial().omega),
            _ => swing.peak_ke_state.kinetic_energy(),
        };
        match swing_margin_with_area(model, eq, &swing, a_acc) {
            Ok(r) => {
                let unstable = r.verdict == SwingVerdict::Unstable;
                records.push(r);
                if unstable {
                    break;
                }
            }
            Err(GeacError::UnresolvedSwing(_)) => break,
            Err(e) => return Err(e),
        }
    }
    let termination = traj.termination();
    let overall = overall_verdict(eq, &records, termination);
    let min_margin = records.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(AssessmentReport {
        overall,
        min_margin,
        terminating_event: termination,
        records,
    })
}

/// Energy is non-increasing, so once a swing in each direction has turned
/// inside the well neither barrier can be reached again.
fn overall_verdict(eq: &EquilibriumSet, records: &[SwingRecord], termination: EventKind) -> OverallVerdict {
    if records.iter().any(|r| r.verdict == SwingVerdict::Unstable) {
        return OverallVerdict::Unstable;
    }
    if termination == EventKind::Converged {
        return OverallVerdict::Stable;
    }
    let certified = |d: Direction| {
        eq.bounding_uep(d).is_none()
            || records
                .iter()
                .any(|r| r.swing.direction == d && r.verdict != SwingVerdict::Unstable)
    };
    if certified(Direction::Forward) && certified(Direction::Backward) {
        OverallVerdict::Stable
    } else {
        OverallVerdict::Undecided
    }
}
