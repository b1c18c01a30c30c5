//! Dormand–Prince 5(4) integration with dense output and event location.
//!
//! Each accepted step is checked for sign changes of
//!
//! * `Δω`: turning points,
//! * `δ − δ_level` for every watched level: UEP crossings,
//! * `−c·Δω − f(δ)`: acceleration zero crossings,
//! * `δ − lo`, `δ − hi`: escape from the admissible interval,
//!
//! and every crossing is refined on the continuous extension of the step.

use serde::{Deserialize, Serialize};

use crate::equilibria::EquilibriumSet;
use crate::error::{GeacError, Result};
use crate::model::{Direction, State, SwingDynamics};

// Dormand–Prince tableau; the system is autonomous so the nodes are unused.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// Step-size controller.
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Relative accuracy of refined event states.
const EVENT_TOL: f64 = 1e-10;

type Vec2 = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    /// Initial state of an integration or of an assessment.
    Start,
    TurningPoint,
    UepCross,
    AccelZero,
    Escape,
    Converged,
    TimeLimit,
}

/// A located event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub state: State,
    /// Sense of motion going into the event.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    /// Crossed level for `UepCross` and `Escape`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
}

/// Energy-based stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    /// Stop once total energy falls below this value …
    pub energy: f64,
    /// … while δ lies strictly inside this interval.
    pub well: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_time: f64,
    /// Integration stops with `Escape` once δ leaves `[lo, hi]`.
    pub escape_bounds: Option<(f64, f64)>,
    /// Angle levels whose crossings are reported as `UepCross`.
    pub watched_levels: Vec<f64>,
    /// Stop at the first crossing of a watched level.
    pub stop_on_level_cross: bool,
    pub convergence: Option<Convergence>,
    pub max_step: f64,
    pub initial_step: Option<f64>,
    /// Disables error control and takes steps of this size.
    pub fixed_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_time: 200.0,
            escape_bounds: None,
            watched_levels: Vec::new(),
            stop_on_level_cross: false,
            convergence: None,
            max_step: f64::INFINITY,
            initial_step: None,
            fixed_step: None,
            max_steps: 5_000_000,
        }
    }
}

impl IntegratorOptions {
    /// Defaults for an oscillator with the given equilibria: escape bounds at
    /// 1.5 times the farthest bounding UEP (10 rad on a side without one),
    /// both UEPs watched, and convergence at `1e−9` of the larger barrier.
    pub fn for_equilibria<D: SwingDynamics>(model: &D, eq: &EquilibriumSet) -> Self {
        let bounds = default_escape_bounds(eq);
        let barriers: Vec<f64> = [eq.left_uep, eq.right_uep]
            .iter()
            .flatten()
            .map(|u| model.potential(u.location))
            .collect();
        let reference = if barriers.is_empty() {
            model.potential(bounds.0).max(model.potential(bounds.1))
        } else {
            barriers.iter().copied().fold(0.0, f64::max)
        };
        let radius = eq.nearest_uep_distance().unwrap_or(f64::INFINITY);
        let well = ((-radius).max(bounds.0), radius.min(bounds.1));
        IntegratorOptions {
            escape_bounds: Some(bounds),
            watched_levels: [eq.left_uep, eq.right_uep]
                .iter()
                .flatten()
                .map(|u| u.location)
                .collect(),
            convergence: Some(Convergence {
                energy: 1e-9 * reference,
                well,
            }),
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(GeacError::InvalidOptions(msg.to_string()));
        if !(self.rtol > 0.0 && self.rtol.is_finite()) || !(self.atol >= 0.0 && self.atol.is_finite()) {
            return bad("tolerances must be positive and finite");
        }
        if !(self.max_time > 0.0 && self.max_time.is_finite()) {
            return bad("max_time must be positive and finite");
        }
        if !(self.max_step > 0.0) {
            return bad("max_step must be positive");
        }
        if let Some((lo, hi)) = self.escape_bounds {
            if !(lo < hi) {
                return bad("escape bounds must satisfy lo < hi");
            }
        }
        if let Some(h) = self.fixed_step {
            if !(h > 0.0 && h.is_finite()) {
                return bad("fixed step must be positive and finite");
            }
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0 && h.is_finite()) {
                return bad("initial step must be positive and finite");
            }
        }
        if self.watched_levels.iter().any(|l| !l.is_finite()) {
            return bad("watched levels must be finite");
        }
        Ok(())
    }
}

/// `[lo, hi]` outside of which a trajectory counts as escaped.
pub fn default_escape_bounds(eq: &EquilibriumSet) -> (f64, f64) {
    let reach = [eq.left_uep, eq.right_uep]
        .iter()
        .flatten()
        .map(|u| 1.5 * u.location.abs())
        .fold(0.0, f64::max);
    let lo = if eq.left_uep.is_some() {
        -reach
    } else {
        -reach.max(10.0)
    };
    let hi = if eq.right_uep.is_some() { reach } else { reach.max(10.0) };
    (lo, hi)
}

/// Continuous extension of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
struct DenseSegment {
    t0: f64,
    h: f64,
    r: [Vec2; 5],
}

impl DenseSegment {
    fn eval(&self, t: f64) -> Vec2 {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut y = [0.0; 2];
        for i in 0..2 {
            let r = &self.r;
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

/// Dense, event-annotated numerical solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<State>,
    segments: Vec<DenseSegment>,
    events: Vec<Event>,
    termination: EventKind,
}

impl Trajectory {
    pub fn samples(&self) -> &[State] {
        &self.samples
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Kind of the event that ended the integration.
    pub fn termination(&self) -> EventKind {
        self.termination
    }

    /// The terminal event.
    pub fn terminal_event(&self) -> &Event {
        self.events.last().expect("every trajectory carries its terminal event")
    }

    pub fn initial(&self) -> State {
        self.samples[0]
    }

    pub fn final_state(&self) -> State {
        *self.samples.last().unwrap()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.samples[0].t, self.samples.last().unwrap().t)
    }

    /// State at time `t` from the continuous extension.
    pub fn interpolate_state(&self, t: f64) -> Result<State> {
        let (start, end) = self.span();
        if !(t >= start && t <= end) {
            return Err(GeacError::OutOfSpan { t, start, end });
        }
        let idx = self.samples.partition_point(|s| s.t <= t);
        // samples[idx - 1].t <= t
        let left = &self.samples[idx - 1];
        if left.t == t {
            return Ok(*left);
        }
        let seg = &self.segments[idx - 1];
        let y = seg.eval(t);
        Ok(State::new(t, y[0], y[1]))
    }
}

/// Integrates `δ̇ = Δω, Δω̇ = −c·Δω − f(δ)` from `init`, locating events on
/// the way.
pub fn integrate_with_events<D: SwingDynamics>(
    model: &D,
    init: State,
    options: &IntegratorOptions,
) -> Result<Trajectory> {
    options.validate()?;
    if !init.is_finite() {
        return Err(GeacError::InvalidOptions("initial state must be finite".into()));
    }
    Solver::new(model, init, options).run()
}

struct Solver<'a, D> {
    model: &'a D,
    opts: &'a IntegratorOptions,
    samples: Vec<State>,
    segments: Vec<DenseSegment>,
    events: Vec<Event>,
    /// Last non-zero sign of each event function.
    signs: Vec<f64>,
    t_end: f64,
}

/// Event function slots: 0 speed, 1 acceleration, 2/3 escape bounds, 4.. levels.
const SLOT_SPEED: usize = 0;
const SLOT_ACCEL: usize = 1;
const SLOT_LO: usize = 2;
const SLOT_HI: usize = 3;
const SLOT_LEVELS: usize = 4;

impl<'a, D: SwingDynamics> Solver<'a, D> {
    fn new(model: &'a D, init: State, opts: &'a IntegratorOptions) -> Self {
        let mut s = Solver {
            model,
            opts,
            samples: vec![init],
            segments: Vec::new(),
            events: Vec::new(),
            signs: Vec::new(),
            t_end: init.t + opts.max_time,
        };
        let y = [init.delta, init.omega];
        s.signs = (0..SLOT_LEVELS + opts.watched_levels.len())
            .map(|slot| sign(s.g(slot, y)))
            .collect();
        s
    }

    fn rhs(&self, y: Vec2) -> Vec2 {
        [y[1], self.model.acceleration(y[0], y[1])]
    }

    fn g(&self, slot: usize, y: Vec2) -> f64 {
        match slot {
            SLOT_SPEED => y[1],
            SLOT_ACCEL => self.model.acceleration(y[0], y[1]),
            SLOT_LO => self.opts.escape_bounds.map_or(1.0, |(lo, _)| y[0] - lo),
            SLOT_HI => self.opts.escape_bounds.map_or(-1.0, |(_, hi)| y[0] - hi),
            k => y[0] - self.opts.watched_levels[k - SLOT_LEVELS],
        }
    }

    fn converged(&self, y: Vec2) -> bool {
        self.opts
            .convergence
            .is_some_and(|c| self.model.total_energy(y[0], y[1]) < c.energy && y[0] > c.well.0 && y[0] < c.well.1)
    }

    fn finish(&mut self, kind: EventKind, state: State) -> Trajectory {
        self.finish_with(Event {
            kind,
            state,
            direction: Direction::of_speed(state.omega),
            level: None,
        })
    }

    fn finish_with(&mut self, event: Event) -> Trajectory {
        self.events.push(event);
        Trajectory {
            samples: std::mem::take(&mut self.samples),
            segments: std::mem::take(&mut self.segments),
            events: std::mem::take(&mut self.events),
            termination: event.kind,
        }
    }

    fn run(mut self) -> Result<Trajectory> {
        let init = self.samples[0];
        let mut t = init.t;
        let mut y = [init.delta, init.omega];
        if self.converged(y) {
            return Ok(self.finish(EventKind::Converged, init));
        }
        let mut k1 = self.rhs(y);
        let mut h = match (self.opts.fixed_step, self.opts.initial_step) {
            (Some(h), _) | (None, Some(h)) => h,
            _ => self.initial_step(y, k1),
        };
        let mut fac_old = 1e-4_f64;
        let mut last_rejected = false;
        let mut steps = 0usize;

        loop {
            if steps >= self.opts.max_steps {
                return Err(GeacError::MaxStepsExceeded(self.opts.max_steps));
            }
            steps += 1;
            let remaining = self.t_end - t;
            let mut last = false;
            h = h.min(self.opts.max_step);
            if h >= remaining * (1.0 - 1e-12) {
                h = remaining;
                last = true;
            }
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(GeacError::StepSizeUnderflow { t, h });
            }

            let (y_new, k7, err, stages) = self.stage(y, k1, h);
            let finite = y_new.iter().all(|v| v.is_finite()) && err.is_finite();

            if self.opts.fixed_step.is_none() {
                if !finite {
                    h *= 0.1;
                    last_rejected = true;
                    continue;
                }
                let expo = 0.2 - BETA * 0.75;
                let fac11 = err.powf(expo);
                if err > 1.0 {
                    h /= (1.0 / FAC_MIN).min(fac11 / SAFETY);
                    last_rejected = true;
                    continue;
                }
                let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                fac_old = err.max(1e-4);
                let mut h_next = h / fac;
                if last_rejected {
                    h_next = h_next.min(h);
                }
                last_rejected = false;
                // Commit with the step actually taken; h_next applies afterwards.
                let t_new = if last { self.t_end } else { t + h };
                if let Some(done) = self.accept(t, y, t_new, y_new, k1, k7, h, &stages) {
                    return Ok(done);
                }
                t = t_new;
                y = y_new;
                k1 = k7;
                h = h_next;
            } else {
                if !finite {
                    return Err(GeacError::StepSizeUnderflow { t, h });
                }
                let t_new = if last { self.t_end } else { t + h };
                if let Some(done) = self.accept(t, y, t_new, y_new, k1, k7, h, &stages) {
                    return Ok(done);
                }
                t = t_new;
                y = y_new;
                k1 = k7;
                h = self.opts.fixed_step.unwrap();
            }
            if last {
                let end = *self.samples.last().unwrap();
                return Ok(self.finish(EventKind::TimeLimit, end));
            }
        }
    }

    fn initial_step(&self, y0: Vec2, f0: Vec2) -> f64 {
        let sk = |i: usize| self.opts.atol + self.opts.rtol * y0[i].abs();
        let norm = |v: Vec2| ((0..2).map(|i| (v[i] / sk(i)).powi(2)).sum::<f64>() / 2.0).sqrt();
        let d0 = norm(y0);
        let d1 = norm(f0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = [y0[0] + h0 * f0[0], y0[1] + h0 * f0[1]];
        let f1 = self.rhs(y1);
        let d2 = norm([f1[0] - f0[0], f1[1] - f0[1]]) / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dm).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.opts.max_time)
    }

    #[allow(clippy::type_complexity)]
    fn stage(&self, y: Vec2, k1: Vec2, h: f64) -> (Vec2, Vec2, f64, [Vec2; 4]) {
        let comb = |coef: &[(f64, Vec2)]| -> Vec2 {
            let mut out = y;
            for (c, k) in coef {
                out[0] += h * c * k[0];
                out[1] += h * c * k[1];
            }
            out
        };
        let k2 = self.rhs(comb(&[(A21, k1)]));
        let k3 = self.rhs(comb(&[(A31, k1), (A32, k2)]));
        let k4 = self.rhs(comb(&[(A41, k1), (A42, k2), (A43, k3)]));
        let k5 = self.rhs(comb(&[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]));
        let k6 = self.rhs(comb(&[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]));
        let y_new = comb(&[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
        let k7 = self.rhs(y_new);
        let mut err = 0.0;
        for i in 0..2 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = self.opts.atol + self.opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sk).powi(2);
        }
        let err = (err / 2.0).sqrt();
        (y_new, k7, err, [k3, k4, k5, k6])
    }

    #[allow(clippy::too_many_arguments)]
    fn accept(
        &mut self,
        t: f64,
        y: Vec2,
        t_new: f64,
        y_new: Vec2,
        k1: Vec2,
        k7: Vec2,
        h: f64,
        stages: &[Vec2; 4],
    ) -> Option<Trajectory> {
        let [k3, k4, k5, k6] = *stages;
        let mut r = [[0.0; 2]; 5];
        for i in 0..2 {
            let diff = y_new[i] - y[i];
            let bspl = h * k1[i] - diff;
            r[0][i] = y[i];
            r[1][i] = diff;
            r[2][i] = bspl;
            r[3][i] = diff - h * k7[i] - bspl;
            r[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        let seg = DenseSegment { t0: t, h, r };

        // Locate every sign change inside the step.
        let mut found: Vec<(f64, usize)> = Vec::new();
        for slot in 0..self.signs.len() {
            let g_new = self.g(slot, y_new);
            let s_new = sign(g_new);
            let s_prev = self.signs[slot];
            if s_new != 0.0 && s_prev != 0.0 && s_new != s_prev {
                let g_old = self.g(slot, y);
                let tc = if g_old == 0.0 {
                    t
                } else {
                    self.refine(slot, &seg, t, g_old, t_new, g_new)
                };
                if slot == SLOT_ACCEL && !self.is_simple_crossing(slot, &seg, t, t_new, tc) {
                    self.signs[slot] = s_new;
                    continue;
                }
                found.push((tc, slot));
            }
            if s_new != 0.0 {
                self.signs[slot] = s_new;
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        for (tc, slot) in found {
            let yc = if tc == t { y } else { seg.eval(tc) };
            let state = State::new(tc, yc[0], yc[1]);
            // Motion direction just before the event.
            let before = seg.eval((tc - 1e-9 * h).max(t));
            let direction = Direction::of_speed(before[1]).or(Direction::of_speed(yc[1]));
            let (kind, level, terminal) = match slot {
                SLOT_SPEED => (EventKind::TurningPoint, None, false),
                SLOT_ACCEL => (EventKind::AccelZero, None, false),
                SLOT_LO | SLOT_HI => {
                    let (lo, hi) = self.opts.escape_bounds.unwrap();
                    let lvl = if slot == SLOT_LO { lo } else { hi };
                    let outward = (slot == SLOT_LO && yc[1] <= 0.0) || (slot == SLOT_HI && yc[1] >= 0.0);
                    if !outward {
                        continue;
                    }
                    (EventKind::Escape, Some(lvl), true)
                }
                k => (
                    EventKind::UepCross,
                    Some(self.opts.watched_levels[k - SLOT_LEVELS]),
                    self.opts.stop_on_level_cross,
                ),
            };
            let event = Event {
                kind,
                state,
                direction,
                level,
            };
            if terminal {
                if tc > t {
                    self.samples.push(state);
                    self.segments.push(seg);
                }
                return Some(self.finish_with(event));
            }
            self.events.push(event);
        }

        self.samples.push(State::new(t_new, y_new[0], y_new[1]));
        self.segments.push(seg);
        if self.converged(y_new) {
            let end = *self.samples.last().unwrap();
            return Some(self.finish(EventKind::Converged, end));
        }
        None
    }

    /// Illinois-modified regula falsi on the dense output.
    fn refine(&self, slot: usize, seg: &DenseSegment, mut a: f64, mut ga: f64, mut b: f64, mut gb: f64) -> f64 {
        let scale = ga.abs().max(gb.abs());
        let mut side = 0i8;
        for _ in 0..200 {
            let mut c = b - gb * (b - a) / (gb - ga);
            if !(c > a && c < b) {
                c = 0.5 * (a + b);
            }
            let gc = self.g(slot, seg.eval(c));
            if gc == 0.0 || gc.abs() <= EVENT_TOL * 1e-3 * scale || (b - a) <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
                return c;
            }
            if sign(gc) == sign(gb) {
                b = c;
                gb = gc;
                if side == 1 {
                    ga *= 0.5;
                }
                side = 1;
            } else {
                a = c;
                ga = gc;
                if side == -1 {
                    gb *= 0.5;
                }
                side = -1;
            }
        }
        if ga.abs() < gb.abs() {
            a
        } else {
            b
        }
    }

    /// Rejects tangential grazes by probing on both sides of the root.
    fn is_simple_crossing(&self, slot: usize, seg: &DenseSegment, t: f64, t_new: f64, tc: f64) -> bool {
        let probe = 1e-6 * (t_new - t);
        let left = self.g(slot, seg.eval((tc - probe).max(t)));
        let right = self.g(slot, seg.eval((tc + probe).min(t_new)));
        sign(left) != sign(right) || left == 0.0 || right == 0.0
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
