use thiserror::Error;

/// Errors raised across the crate.
///
/// Variants carry the location (time `t`, radius `R`, ...) when one exists so
/// callers can report where a trajectory or a hypothesis broke down.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("3-form is not positive: induced bilinear form is not definite")]
    NotPositive,
    #[error("vectors do not span a 3-plane (Gram determinant {0:e})")]
    DegenerateTriple(f64),
    #[error("vectors do not span a 4-plane (Gram determinant {0:e})")]
    DegenerateQuadruple(f64),
    #[error("state outside the admissible cone (Lambda < 0, x1 > 0, x2 > 0)")]
    OutsideCone,
    #[error("inconsistent parameters: {0}")]
    InconsistentParams(String),
    #[error("step size underflow at t = {0}")]
    StepFailure(f64),
    #[error("t = {t} outside the domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("quaternion is not unit (|q| = {0})")]
    NonUnit(f64),
    #[error("Killing frame degenerates at this point")]
    SingularPoint,
    #[error("level {level} is not attained (range [{lo}, {hi}])")]
    EmptyLevel { level: f64, lo: f64, hi: f64 },
    #[error("curve cannot be classified: {0}")]
    Unclassifiable(String),
    #[error("unknown case: {0}")]
    UnknownCase(String),
    #[error("hypothesis failed at t = {t}: {what}")]
    HypothesisFailed { t: f64, what: String },
    #[error("tau is singular at R = {0} (det tau below threshold)")]
    SingularTau(f64),
    #[error("det tau = {0} is not positive")]
    NonPositiveDet(f64),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
