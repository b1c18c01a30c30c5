use thiserror::Error;

/// Errors produced anywhere in the assessment pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeacError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("constant term {constant} is not zero relative to the largest coefficient {scale}; shift coordinates so the stable equilibrium is the origin")]
    NonZeroConstantTerm { constant: f64, scale: f64 },

    #[error("no stable equilibrium: Pm = {pm} must be below Pmax = {pmax}")]
    NoSep { pm: f64, pmax: f64 },

    #[error("root finding failed: {0}")]
    RootFindingFailure(String),

    #[error("equilibrium at {location} is degenerate (slope {slope})")]
    DegenerateEquilibrium { location: f64, slope: f64 },

    #[error("step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("step budget of {0} exhausted")]
    MaxStepsExceeded(usize),

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("t = {t} lies outside the trajectory span [{start}, {end}]")]
    OutOfSpan { t: f64, start: f64, end: f64 },

    #[error("swing {0} has no resolved end")]
    UnresolvedSwing(usize),

    #[error("initial state delta = {0} lies outside the potential well")]
    OutsideWell(f64),

    #[error("sample time {t} does not follow {previous}")]
    NonMonotoneTime { t: f64, previous: f64 },

    #[error("online assessor has no post-fault model")]
    ModelMissing,

    #[error("{value} outside the admissible range [{lo}, {hi})")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("no critical clearing angle (arccos argument {0})")]
    NoCriticalAngle(f64),

    #[error("oracle verdicts agree at both ends of the interval ({0})")]
    SameVerdictAtEndpoints(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl GeacError {
    /// Whether the failure came from the numerical layer rather than from inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            GeacError::RootFindingFailure(_)
                | GeacError::StepSizeUnderflow { .. }
                | GeacError::MaxStepsExceeded(_)
                | GeacError::UnresolvedSwing(_)
                | GeacError::DegenerateEquilibrium { .. }
        )
    }
}

impl From<std::io::Error> for GeacError {
    fn from(e: std::io::Error) -> Self {
        GeacError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, GeacError>;
