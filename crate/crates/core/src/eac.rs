//! Classical equal-area criterion for the single-machine-infinite-bus system
//!
//! ```text
//!   δ̈ + (D/2H)·δ̇ + (ω_s/2H)·(Pmax_k·sin δ − Pm) = 0
//! ```
//!
//! with `k` = pre-fault, fault-on and post-fault network conditions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{GeacError, Result};
use crate::integrator::{integrate_with_events, EventKind, IntegratorOptions};
use crate::model::{PolynomialOscillator, SmibParams, State, SwingDynamics};
use crate::oracle::bisect_boundary;

/// Maps an angle to `(−π, π]`.
pub fn canonical_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Pre-fault, fault-on and post-fault SMIB conditions that differ only in Pmax.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmibScenario {
    pub h: f64,
    #[serde(default)]
    pub d: f64,
    pub omega_s: f64,
    pub pm: f64,
    pub pmax_pre: f64,
    pub pmax_fault: f64,
    pub pmax_post: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default)]
    pub tc: f64,
}

impl SmibScenario {
    /// Checks what the closed forms need: a pre-fault and post-fault SEP,
    /// a fault-on network weaker than the post-fault one, and `t0 ≤ tc`.
    pub fn validate(&self) -> Result<()> {
        self.phase(1).validate()?;
        self.phase(3).validate()?;
        if !(self.pmax_fault >= 0.0 && self.pmax_fault < self.pmax_post) {
            return Err(GeacError::InvalidModel(format!(
                "fault-on Pmax {} must lie in [0, post-fault Pmax {})",
                self.pmax_fault, self.pmax_post
            )));
        }
        if !(self.t0.is_finite() && self.tc.is_finite() && self.t0 <= self.tc) {
            return Err(GeacError::InvalidModel("fault times must satisfy t0 <= tc".into()));
        }
        Ok(())
    }

    /// `Pmax2 < Pm < Pmax3 < Pmax1`.
    pub fn standing_assumption_holds(&self) -> bool {
        self.pmax_fault < self.pm && self.pm < self.pmax_post && self.pmax_post < self.pmax_pre
    }

    /// Parameters of phase 1 (pre-fault), 2 (fault-on) or 3 (post-fault).
    pub fn phase(&self, k: u8) -> SmibParams {
        let pmax = match k {
            1 => self.pmax_pre,
            2 => self.pmax_fault,
            3 => self.pmax_post,
            _ => panic!("phase index must be 1, 2 or 3"),
        };
        SmibParams {
            h: self.h,
            d: self.d,
            omega_s: self.omega_s,
            pm: self.pm,
            pmax,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmibEquilibria {
    pub delta_s: f64,
    /// `π − δs`.
    pub delta_u1: f64,
    /// `−π − δs`.
    pub delta_u2: f64,
}

pub fn smib_equilibria(p: &SmibParams) -> Result<SmibEquilibria> {
    let delta_s = p.sep_angle()?;
    Ok(SmibEquilibria {
        delta_s,
        delta_u1: PI - delta_s,
        delta_u2: -PI - delta_s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalAreas {
    pub a_acc: f64,
    pub a_dec: f64,
    /// `(A_dec − A_acc)/A_acc`, `+∞` when nothing was accelerated.
    pub margin: f64,
}

/// Closed-form areas and margin for clearing at `delta_c` (damping ignored).
pub fn classical_margin(s: &SmibScenario, delta_c: f64) -> Result<ClassicalAreas> {
    s.validate()?;
    let ds1 = smib_equilibria(&s.phase(1))?.delta_s;
    let du3 = smib_equilibria(&s.phase(3))?.delta_u1;
    let dc = canonical_angle(delta_c);
    if !(dc >= ds1 && dc < du3) {
        return Err(GeacError::Domain {
            value: dc,
            lo: ds1,
            hi: du3,
        });
    }
    let a_acc = s.pm * (dc - ds1) + s.pmax_fault * (dc.cos() - ds1.cos());
    let a_dec = s.pmax_post * (dc.cos() - du3.cos()) - s.pm * (du3 - dc);
    let margin = if a_acc > 0.0 {
        (a_dec - a_acc) / a_acc
    } else {
        f64::INFINITY
    };
    Ok(ClassicalAreas { a_acc, a_dec, margin })
}

/// Clearing angle at which the acceleration and deceleration areas balance.
pub fn critical_clearing_angle(s: &SmibScenario) -> Result<f64> {
    s.validate()?;
    let ds1 = smib_equilibria(&s.phase(1))?.delta_s;
    let du3 = smib_equilibria(&s.phase(3))?.delta_u1;
    let arg = (s.pm * (du3 - ds1) + s.pmax_post * du3.cos() - s.pmax_fault * ds1.cos()) / (s.pmax_post - s.pmax_fault);
    if !(-1.0..=1.0).contains(&arg) {
        return Err(GeacError::NoCriticalAngle(arg));
    }
    Ok(canonical_angle(arg.acos()))
}

/// The sinusoidal swing equation for one network condition, in machine
/// angle coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidalSwing {
    gain: f64,
    damping: f64,
    pm: f64,
    pmax: f64,
    /// Potential reference angle.
    reference: f64,
}

impl SinusoidalSwing {
    /// Potential is gauged at the SEP when one exists, else at `δ = 0`.
    pub fn new(p: &SmibParams) -> Self {
        let reference = p.sep_angle().unwrap_or(0.0);
        SinusoidalSwing {
            gain: p.omega_s / (2.0 * p.h),
            damping: p.d / (2.0 * p.h),
            pm: p.pm,
            pmax: p.pmax,
            reference,
        }
    }
}

impl SwingDynamics for SinusoidalSwing {
    fn damping(&self) -> f64 {
        self.damping
    }

    fn restoring(&self, delta: f64) -> f64 {
        self.gain * (self.pmax * delta.sin() - self.pm)
    }

    fn potential(&self, delta: f64) -> f64 {
        let r = self.reference;
        self.gain * (self.pmax * (r.cos() - delta.cos()) - self.pm * (delta - r))
    }
}

fn fault_on_options(max_time: f64) -> IntegratorOptions {
    IntegratorOptions {
        max_time,
        escape_bounds: Some((-4.0 * PI, 4.0 * PI)),
        ..Default::default()
    }
}

/// State when the fault-on trajectory from the pre-fault SEP reaches `delta_c`.
pub fn clearing_state_at_angle(s: &SmibScenario, delta_c: f64) -> Result<State> {
    s.validate()?;
    let ds1 = smib_equilibria(&s.phase(1))?.delta_s;
    let dc = canonical_angle(delta_c);
    let start = State::new(s.t0, ds1, 0.0);
    if dc == ds1 {
        return Ok(start);
    }
    if dc < ds1 {
        return Err(GeacError::Domain {
            value: dc,
            lo: ds1,
            hi: PI,
        });
    }
    let dynamics = SinusoidalSwing::new(&s.phase(2));
    let opts = IntegratorOptions {
        watched_levels: vec![dc],
        stop_on_level_cross: true,
        ..fault_on_options(1e3)
    };
    let traj = integrate_with_events(&dynamics, start, &opts)?;
    match traj.termination() {
        EventKind::UepCross => Ok(traj.terminal_event().state),
        _ => Err(GeacError::Domain {
            value: dc,
            lo: ds1,
            hi: traj.final_state().delta,
        }),
    }
}

/// State at `tc` after a fault applied at `t0` to the machine resting at
/// its pre-fault SEP.
pub fn clearing_state_at_time(s: &SmibScenario) -> Result<State> {
    s.validate()?;
    let ds1 = smib_equilibria(&s.phase(1))?.delta_s;
    let start = State::new(s.t0, ds1, 0.0);
    if s.tc == s.t0 {
        return Ok(start);
    }
    let dynamics = SinusoidalSwing::new(&s.phase(2));
    let traj = integrate_with_events(&dynamics, start, &fault_on_options(s.tc - s.t0))?;
    Ok(traj.final_state())
}

/// Post-fault polynomial model and initial state in SEP-centered
/// coordinates for clearing at `delta_c`.
pub fn taylor_bridge(s: &SmibScenario, delta_c: f64, order: usize) -> Result<(PolynomialOscillator, State)> {
    let post = s.phase(3);
    let model = PolynomialOscillator::from_smib_taylor(&post, true, order)?;
    let cleared = clearing_state_at_angle(s, delta_c)?;
    let ds3 = post.sep_angle()?;
    Ok((model, State::new(0.0, cleared.delta - ds3, cleared.omega)))
}

/// Simulates the post-fault system after clearing at `delta_c` and reports
/// whether the first swing stays below the post-fault UEP.
pub fn first_swing_survives(s: &SmibScenario, delta_c: f64) -> Result<bool> {
    let cleared = clearing_state_at_angle(s, delta_c)?;
    let du3 = smib_equilibria(&s.phase(3))?.delta_u1;
    let opts = IntegratorOptions {
        watched_levels: vec![du3],
        stop_on_level_cross: true,
        ..fault_on_options(50.0)
    };
    let traj = integrate_with_events(&SinusoidalSwing::new(&s.phase(3)), cleared, &opts)?;
    Ok(!matches!(traj.termination(), EventKind::UepCross | EventKind::Escape))
}

/// Critical clearing angle located by bisection on [`first_swing_survives`].
pub fn simulated_critical_clearing_angle(s: &SmibScenario, tol: f64) -> Result<f64> {
    let ds1 = smib_equilibria(&s.phase(1))?.delta_s;
    let du3 = smib_equilibria(&s.phase(3))?.delta_u1;
    let (a, b) = bisect_boundary(ds1, du3 - tol, tol, |dc| first_swing_survives(s, dc))?;
    Ok(0.5 * (a + b))
}
