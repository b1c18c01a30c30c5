//! The generalized one-degree-of-freedom oscillator
//!
//! ```text
//!   δ̇  = Δω
//!   Δω̇ = −a0·Δω − f(δ),      f(δ) = a1·δ + a2·δ² + … + aN·δᴺ
//! ```
//!
//! written in coordinates where the stable equilibrium sits at the origin.
//! The restoring power seen on the power–angle plane is `P_f = −f` and the
//! damping power is `P_Δω = a0·Δω`.

use serde::{Deserialize, Serialize};

use crate::error::{GeacError, Result};

/// Relative size below which a constant term counts as zero.
const CONSTANT_TERM_TOL: f64 = 1e-12;

/// Second-order autonomous dynamics `δ̈ = −c·δ̇ − f(δ)` with linear damping.
///
/// The integrator, the oracle and the classical SMIB bridge are all written
/// against this trait so that the sinusoidal swing equation and its
/// polynomial truncations share one numerical path.
pub trait SwingDynamics {
    /// Linear damping coefficient `c ≥ 0`.
    fn damping(&self) -> f64;

    /// Restoring term `f(δ)`.
    fn restoring(&self, delta: f64) -> f64;

    /// Potential `V(δ)` with `V' = f`, gauged to vanish at the stable equilibrium.
    fn potential(&self, delta: f64) -> f64;

    fn acceleration(&self, delta: f64, omega: f64) -> f64 {
        -self.damping() * omega - self.restoring(delta)
    }

    fn total_energy(&self, delta: f64, omega: f64) -> f64 {
        kinetic_energy(omega) + self.potential(delta)
    }
}

/// A point in time on the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub delta: f64,
    pub omega: f64,
}

impl State {
    pub fn new(t: f64, delta: f64, omega: f64) -> Self {
        State { t, delta, omega }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.delta.is_finite() && self.omega.is_finite()
    }

    pub fn kinetic_energy(&self) -> f64 {
        kinetic_energy(self.omega)
    }
}

/// Sense of motion along the angle axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// δ increasing.
    Forward,
    /// δ decreasing.
    Backward,
}

impl Direction {
    /// Direction of motion for a speed, `None` when at rest.
    pub fn of_speed(omega: f64) -> Option<Direction> {
        if omega > 0.0 {
            Some(Direction::Forward)
        } else if omega < 0.0 {
            Some(Direction::Backward)
        } else {
            None
        }
    }

    pub fn reversed(self) -> Direction {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }

    /// `+1` forward, `−1` backward.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }

    /// Single-letter tag used in tabular reports.
    pub fn letter(self) -> char {
        match self {
            Direction::Forward => 'F',
            Direction::Backward => 'B',
        }
    }
}

/// `E_g = ½·Δω²`.
pub fn kinetic_energy(omega: f64) -> f64 {
    0.5 * omega * omega
}

/// Polynomial oscillator with its stable equilibrium at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialOscillator {
    damping: f64,
    /// `a1..aN`; index `k` holds the coefficient of `δ^(k+1)`.
    coeffs: Vec<f64>,
}

impl PolynomialOscillator {
    /// Builds an oscillator from the damping `a0` and the restoring
    /// coefficients `a1..aN` (no constant term).
    pub fn new(damping: f64, coeffs: impl Into<Vec<f64>>) -> Result<Self> {
        let mut coeffs = coeffs.into();
        if !damping.is_finite() || damping < 0.0 {
            return Err(GeacError::InvalidModel(format!(
                "damping must be finite and non-negative, got {damping}"
            )));
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(GeacError::InvalidModel(format!("non-finite coefficient {bad}")));
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(GeacError::InvalidModel(
                "restoring polynomial is identically zero".into(),
            ));
        }
        if coeffs[0] <= 0.0 {
            return Err(GeacError::InvalidModel(format!(
                "linear coefficient a1 = {} must be positive for the origin to be stable",
                coeffs[0]
            )));
        }
        Ok(PolynomialOscillator { damping, coeffs })
    }

    /// Builds an oscillator from `[a_const, a1, …, aN]`. A constant term that
    /// is not negligible against the largest coefficient is rejected.
    pub fn from_full_coefficients(damping: f64, full: &[f64]) -> Result<Self> {
        let Some((&constant, rest)) = full.split_first() else {
            return Err(GeacError::InvalidModel("empty coefficient list".into()));
        };
        let scale = full.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if constant.abs() > CONSTANT_TERM_TOL * scale {
            return Err(GeacError::NonZeroConstantTerm { constant, scale });
        }
        Self::new(damping, rest.to_vec())
    }

    /// Multiplies every restoring coefficient by `kappa`.
    pub fn scaled(&self, kappa: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(GeacError::InvalidModel(format!(
                "scaling must be finite and positive, got {kappa}"
            )));
        }
        Self::new(self.damping, self.coeffs.iter().map(|c| c * kappa).collect::<Vec<_>>())
    }

    /// Same restoring polynomial with a different damping coefficient.
    pub fn with_damping(&self, damping: f64) -> Result<Self> {
        Self::new(damping, self.coeffs.clone())
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    /// Restoring coefficients `a1..aN`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Largest coefficient magnitude, damping excluded.
    pub fn coeff_scale(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// `f(δ) = Σ a_k·δ^k`, evaluated as `δ·(a1 + δ·(a2 + …))`.
    pub fn eval_f(&self, delta: f64) -> f64 {
        delta * horner(self.coeffs.iter().copied(), delta)
    }

    /// `f'(δ)`.
    pub fn eval_df(&self, delta: f64) -> f64 {
        horner(self.coeffs.iter().enumerate().map(|(k, a)| (k + 1) as f64 * a), delta)
    }

    /// `P_f(δ) = −f(δ)`.
    pub fn p_f(&self, delta: f64) -> f64 {
        -self.eval_f(delta)
    }

    /// `P_Δω(Δω) = a0·Δω`.
    pub fn p_damping(&self, omega: f64) -> f64 {
        self.damping * omega
    }

    /// Exact antiderivative `V(δ) = Σ a_k·δ^(k+1)/(k+1)`, `V(0) = 0`.
    pub fn potential_energy(&self, delta: f64) -> f64 {
        delta * delta * horner(self.coeffs.iter().enumerate().map(|(k, a)| a / (k + 2) as f64), delta)
    }

    /// `(δ̇, Δω̇) = (Δω, −a0·Δω − f(δ))`.
    pub fn vector_field(&self, s: &State) -> (f64, f64) {
        (s.omega, -self.damping * s.omega - self.eval_f(s.delta))
    }

    pub fn total_energy(&self, s: &State) -> f64 {
        s.kinetic_energy() + self.potential_energy(s.delta)
    }

    /// Taylor-truncated swing equation around its stable equilibrium.
    ///
    /// With `sep_shift` the expansion point is `δs = asin(Pm/Pmax)` and the
    /// constant term cancels; without it the expansion is taken at `δ = 0`,
    /// which only yields a valid oscillator when `Pm = 0`.
    pub fn from_smib_taylor(p: &SmibParams, sep_shift: bool, order: usize) -> Result<Self> {
        p.validate()?;
        if order == 0 {
            return Err(GeacError::InvalidModel("Taylor order must be at least 1".into()));
        }
        let gain = p.omega_s / (2.0 * p.h);
        let center = if sep_shift { p.sep_angle()? } else { 0.0 };
        let (s, c) = center.sin_cos();
        // k-th derivative of sin cycles through sin, cos, −sin, −cos.
        let derivs = [s, c, -s, -c];
        let mut full = Vec::with_capacity(order + 1);
        let mut factorial = 1.0;
        full.push(gain * (p.pmax * s - p.pm));
        for k in 1..=order {
            factorial *= k as f64;
            full.push(gain * p.pmax * derivs[k % 4] / factorial);
        }
        if sep_shift {
            // Pmax·sin δs = Pm analytically; drop the rounding residue.
            full[0] = 0.0;
        }
        Self::from_full_coefficients(p.d / (2.0 * p.h), &full)
    }
}

impl SwingDynamics for PolynomialOscillator {
    fn damping(&self) -> f64 {
        self.damping
    }

    fn restoring(&self, delta: f64) -> f64 {
        self.eval_f(delta)
    }

    fn potential(&self, delta: f64) -> f64 {
        self.potential_energy(delta)
    }
}

/// Nested evaluation of `c0 + c1·x + c2·x² + …`.
fn horner(coeffs: impl DoubleEndedIterator<Item = f64>, x: f64) -> f64 {
    coeffs.rev().fold(0.0, |acc, c| acc * x + c)
}

/// Single-machine-infinite-bus parameters for one network condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmibParams {
    /// Inertia constant (s).
    pub h: f64,
    /// Damping (s).
    pub d: f64,
    /// Synchronous speed (rad/s).
    pub omega_s: f64,
    /// Mechanical power (p.u.).
    pub pm: f64,
    /// Maximum deliverable electrical power (p.u.).
    pub pmax: f64,
}

impl SmibParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.h, self.d, self.omega_s, self.pm, self.pmax];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(GeacError::InvalidModel("SMIB parameters must be finite".into()));
        }
        if self.h <= 0.0 || self.omega_s <= 0.0 {
            return Err(GeacError::InvalidModel("H and omega_s must be positive".into()));
        }
        if self.d < 0.0 {
            return Err(GeacError::InvalidModel("D must be non-negative".into()));
        }
        if self.pm < 0.0 || self.pm >= self.pmax {
            return Err(GeacError::NoSep {
                pm: self.pm,
                pmax: self.pmax,
            });
        }
        Ok(())
    }

    /// `δs = asin(Pm/Pmax)`.
    pub fn sep_angle(&self) -> Result<f64> {
        if self.pm < 0.0 || self.pm >= self.pmax {
            return Err(GeacError::NoSep {
                pm: self.pm,
                pmax: self.pmax,
            });
        }
        Ok((self.pm / self.pmax).asin())
    }
}
