//! Scenario files: one post-fault model, one starting condition, and the
//! solver settings, in a strict TOML schema.
//!
//! ```toml
//! name = "case 1"
//!
//! [model.polynomial]
//! damping = 4.42e-4
//! coefficients = [0.2649, -0.0503, -0.04414]
//!
//! [start.initial]
//! delta = 0.13
//! omega = -0.3
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eac::{clearing_state_at_time, SmibScenario};
use crate::error::{GeacError, Result};
use crate::model::{PolynomialOscillator, SmibParams, State};
use crate::swing::{AssessmentOptions, FirstSwingArea};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub model: ModelSpec,
    pub start: StartSpec,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

/// Exactly one of the two must be given.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polynomial: Option<PolynomialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smib: Option<SmibSpec>,
}

/// `Δω̇ = −damping·Δω − kappa·Σ coefficients[k−1]·δᵏ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialSpec {
    #[serde(default)]
    pub damping: f64,
    pub coefficients: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

/// Post-fault SMIB network, Taylor-expanded to `order`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmibSpec {
    pub h: f64,
    #[serde(default)]
    pub d: f64,
    pub omega_s: f64,
    pub pm: f64,
    pub pmax: f64,
    pub order: usize,
    #[serde(default = "yes")]
    pub sep_shift: bool,
}

fn yes() -> bool {
    true
}

impl SmibSpec {
    pub fn params(&self) -> SmibParams {
        SmibParams {
            h: self.h,
            d: self.d,
            omega_s: self.omega_s,
            pm: self.pm,
            pmax: self.pmax,
        }
    }

    /// Angle the Taylor model's `δ = 0` corresponds to.
    fn center(&self) -> Result<f64> {
        if self.sep_shift {
            self.params().sep_angle()
        } else {
            Ok(0.0)
        }
    }
}

/// Exactly one of the two must be given.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<FaultSpec>,
}

/// Post-fault state at clearance, in model coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub delta: f64,
    pub omega: f64,
}

/// Fault applied at `t0` and cleared at `tc`; needs an SMIB model, whose
/// `pmax` is the post-fault value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    #[serde(default)]
    pub t0: f64,
    pub tc: f64,
    pub pmax_pre: f64,
    pub pmax_fault: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_swings: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_swing_area: Option<FirstSwingArea>,
}

impl Scenario {
    /// Builds the post-fault oscillator.
    pub fn model(&self) -> Result<PolynomialOscillator> {
        match (&self.model.polynomial, &self.model.smib) {
            (Some(p), None) => {
                let m = PolynomialOscillator::new(p.damping, p.coefficients.clone())?;
                m.scaled(p.kappa.unwrap_or(1.0))
            }
            (None, Some(s)) => PolynomialOscillator::from_smib_taylor(&s.params(), s.sep_shift, s.order),
            _ => Err(GeacError::Validation(
                "exactly one of [model.polynomial] and [model.smib] is required".into(),
            )),
        }
    }

    /// State handed to the post-fault assessment.
    pub fn initial_state(&self) -> Result<State> {
        match (&self.start.initial, &self.start.fault) {
            (Some(i), None) => Ok(State::new(0.0, i.delta, i.omega)),
            (None, Some(f)) => {
                let Some(smib) = &self.model.smib else {
                    return Err(GeacError::Validation("[start.fault] needs an SMIB model".into()));
                };
                let s = self.fault_timeline(smib, f);
                let cleared = clearing_state_at_time(&s)?;
                Ok(State::new(cleared.t, cleared.delta - smib.center()?, cleared.omega))
            }
            _ => Err(GeacError::Validation(
                "exactly one of [start.initial] and [start.fault] is required".into(),
            )),
        }
    }

    fn fault_timeline(&self, smib: &SmibSpec, f: &FaultSpec) -> SmibScenario {
        SmibScenario {
            h: smib.h,
            d: smib.d,
            omega_s: smib.omega_s,
            pm: smib.pm,
            pmax_pre: f.pmax_pre,
            pmax_fault: f.pmax_fault,
            pmax_post: smib.pmax,
            t0: f.t0,
            tc: f.tc,
        }
    }

    pub fn assessment_options(&self) -> AssessmentOptions {
        let d = AssessmentOptions::default();
        AssessmentOptions {
            rtol: self.integrator.rtol.unwrap_or(d.rtol),
            atol: self.integrator.atol.unwrap_or(d.atol),
            max_time: self.integrator.max_time.unwrap_or(d.max_time),
            max_swings: self.analysis.max_swings.unwrap_or(d.max_swings),
            first_swing_area: self.analysis.first_swing_area.unwrap_or(d.first_swing_area),
        }
    }

    /// Replaces the polynomial scaling; SMIB models are left alone.
    pub fn with_kappa(mut self, kappa: f64) -> Self {
        if let Some(p) = self.model.polynomial.as_mut() {
            p.kappa = Some(kappa);
        }
        self
    }

    /// Checks every invariant a run depends on.
    pub fn validate(&self) -> Result<()> {
        let invalid = |e: GeacError| match e {
            GeacError::Validation(_) => e,
            other => GeacError::Validation(other.to_string()),
        };
        self.model().map_err(invalid)?;
        if let (Some(smib), Some(f)) = (&self.model.smib, &self.start.fault) {
            self.fault_timeline(smib, f).validate().map_err(invalid)?;
        }
        self.initial_state().map_err(invalid)?;
        let o = self.assessment_options();
        if !(o.rtol > 0.0 && o.atol >= 0.0 && o.max_time > 0.0) || o.max_swings == 0 {
            return Err(GeacError::Validation(
                "tolerances, max_time and max_swings must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let s: Scenario = toml::from_str(text).map_err(|e| GeacError::Parse(e.to_string()))?;
    s.validate()?;
    Ok(s)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text).map_err(|e| match e {
        GeacError::Parse(msg) => GeacError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}
