//! Streaming assessment from measured `(t, δ, Δω)` samples.
//!
//! The post-fault model is known; the fault-on model is not, so the first
//! swing's acceleration area starts from `½Δω²` of the first sample and is
//! raised by any larger kinetic energy seen afterwards.

use crate::equilibria::{find_equilibria, EquilibriumSet};
use crate::error::{GeacError, Result};
use crate::integrator::{Event, EventKind};
use crate::model::{Direction, PolynomialOscillator, State};
use crate::swing::{swing_margin, Swing, SwingRecord, SwingVerdict};

#[derive(Debug, Clone)]
struct OpenSwing {
    index: usize,
    direction: Direction,
    start: Event,
    peak: State,
}

/// Single-writer state machine fed one sample at a time.
#[derive(Debug, Clone, Default)]
pub struct OnlineAssessor {
    context: Option<(PolynomialOscillator, EquilibriumSet)>,
    first: Option<State>,
    prev: Option<State>,
    open: Option<OpenSwing>,
    finished: bool,
}

impl OnlineAssessor {
    pub fn new(model: PolynomialOscillator) -> Result<Self> {
        let eq = find_equilibria(&model)?;
        Ok(OnlineAssessor {
            context: Some((model, eq)),
            ..Default::default()
        })
    }

    /// Whether a swing has already been found unstable.
    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Feeds one sample; returns the record of a swing that closed with it.
    pub fn push_sample(&mut self, t: f64, delta: f64, omega: f64) -> Result<Option<SwingRecord>> {
        let Some((model, eq)) = self.context.as_ref() else {
            return Err(GeacError::ModelMissing);
        };
        if let Some(prev) = self.prev {
            if !(t > prev.t) {
                return Err(GeacError::NonMonotoneTime { t, previous: prev.t });
            }
        }
        let cur = State::new(t, delta, omega);
        if self.finished {
            self.prev = Some(cur);
            return Ok(None);
        }
        let first = *self.first.get_or_insert(cur);

        let Some(prev) = self.prev.replace(cur) else {
            self.open = Direction::of_speed(omega).map(|d| open_at_start(first, d));
            return Ok(None);
        };
        let Some(open) = self.open.as_mut() else {
            if let Some(d) = Direction::of_speed(omega) {
                let mut swing = open_at_start(first, d);
                if cur.kinetic_energy() > swing.peak.kinetic_energy() {
                    swing.peak = cur;
                }
                self.open = Some(swing);
            }
            return Ok(None);
        };

        let dir = open.direction;
        if let Some(uep) = eq.bounding_uep(dir) {
            let level = uep.location;
            let before = (prev.delta - level) * dir.sign();
            let after = (cur.delta - level) * dir.sign();
            if before < 0.0 && after >= 0.0 {
                let s = (level - prev.delta) / (cur.delta - prev.delta);
                let crossing = lerp(prev, cur, s);
                let crossing = State {
                    delta: level,
                    ..crossing
                };
                let end = Event {
                    kind: EventKind::UepCross,
                    state: crossing,
                    direction: Some(dir),
                    level: Some(level),
                };
                let record = close(model, eq, open, end)?;
                self.finished = record.verdict == SwingVerdict::Unstable;
                self.open = None;
                return Ok(Some(record));
            }
        }

        if cur.omega * dir.sign() < 0.0 {
            let s = prev.omega / (prev.omega - cur.omega);
            let turn = State {
                omega: 0.0,
                ..lerp(prev, cur, s)
            };
            let end = Event {
                kind: EventKind::TurningPoint,
                state: turn,
                direction: Some(dir),
                level: None,
            };
            let record = close(model, eq, open, end)?;
            let next_dir = dir.reversed();
            let mut next = OpenSwing {
                index: open.index + 1,
                direction: next_dir,
                start: Event {
                    direction: Some(next_dir),
                    ..end
                },
                peak: turn,
            };
            if cur.kinetic_energy() > next.peak.kinetic_energy() {
                next.peak = cur;
            }
            *open = next;
            return Ok(Some(record));
        }

        if cur.kinetic_energy() > open.peak.kinetic_energy() {
            open.peak = cur;
        }
        Ok(None)
    }
}

fn open_at_start(first: State, direction: Direction) -> OpenSwing {
    OpenSwing {
        index: 1,
        direction,
        start: Event {
            kind: EventKind::Start,
            state: first,
            direction: Some(direction),
            level: None,
        },
        peak: first,
    }
}

fn close(model: &PolynomialOscillator, eq: &EquilibriumSet, open: &OpenSwing, end: Event) -> Result<SwingRecord> {
    let swing = Swing {
        index: open.index,
        direction: open.direction,
        start: open.start,
        end,
        peak_ke_state: open.peak,
    };
    swing_margin(model, eq, &swing)
}

fn lerp(a: State, b: State, s: f64) -> State {
    State::new(
        a.t + s * (b.t - a.t),
        a.delta + s * (b.delta - a.delta),
        a.omega + s * (b.omega - a.omega),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq10() -> PolynomialOscillator {
        PolynomialOscillator::new(4.42e-4, vec![0.2649, -0.0503, -0.04414]).unwrap()
    }

    #[test]
    fn needs_a_model() {
        let mut a = OnlineAssessor::default();
        assert!(matches!(a.push_sample(0.0, 0.1, 0.0), Err(GeacError::ModelMissing)));
    }

    #[test]
    fn rejects_non_monotone_time() {
        let mut a = OnlineAssessor::new(eq10()).unwrap();
        a.push_sample(1.0, 0.1, 0.0).unwrap();
        assert!(matches!(
            a.push_sample(1.0, 0.1, 0.0),
            Err(GeacError::NonMonotoneTime { .. })
        ));
        assert!(matches!(
            a.push_sample(0.5, 0.1, 0.0),
            Err(GeacError::NonMonotoneTime { .. })
        ));
    }

    #[test]
    fn resting_stream_emits_nothing() {
        let mut a = OnlineAssessor::new(eq10()).unwrap();
        for i in 0..500 {
            assert!(a.push_sample(i as f64 * 0.01, 0.0, 0.0).unwrap().is_none());
        }
    }

    #[test]
    fn crossing_between_samples_is_interpolated() {
        let m = eq10();
        let eq = find_equilibria(&m).unwrap();
        let d3 = eq.right_uep.unwrap().location;
        let mut a = OnlineAssessor::new(m).unwrap();
        assert!(a.push_sample(0.0, d3 - 0.2, 1.0).unwrap().is_none());
        assert!(a.push_sample(0.1, d3 - 0.1, 0.8).unwrap().is_none());
        let r = a.push_sample(0.2, d3 + 0.1, 0.6).unwrap().unwrap();
        assert_eq!(r.verdict, SwingVerdict::Unstable);
        assert_eq!(r.swing.end.kind, EventKind::UepCross);
        assert!((r.swing.end.state.omega - 0.7).abs() < 1e-12);
        assert!((r.swing.end.state.t - 0.15).abs() < 1e-12);
        assert!((r.a_acc - 0.5).abs() < 1e-12);
        assert!((r.margin + 0.5 * 0.7 * 0.7 / 0.5).abs() < 1e-12);
        assert!(a.is_finished());
        assert!(a.push_sample(0.3, d3 + 0.2, 0.7).unwrap().is_none());
    }

    #[test]
    fn turning_point_closes_a_stable_swing() {
        let mut a = OnlineAssessor::new(eq10()).unwrap();
        assert!(a.push_sample(0.0, 0.5, 0.2).unwrap().is_none());
        let r = a.push_sample(0.1, 0.52, -0.2).unwrap().unwrap();
        assert_eq!(r.verdict, SwingVerdict::Stable);
        assert_eq!(r.swing.direction, Direction::Forward);
        assert!((r.swing.end.state.delta - 0.51).abs() < 1e-12);
        assert!((r.swing.end.state.t - 0.05).abs() < 1e-12);
    }
}
