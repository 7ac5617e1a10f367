use thiserror::Error;

/// Errors produced by the library. Every fallible operation returns this type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("control {0:?} lies outside the control cone")]
    ControlSet(Vec<f64>),

    #[error("extended control violates w0 + |w| = 1 (w0 = {w0}, |w| = {norm})")]
    Simplex { w0: f64, norm: f64 },

    #[error("impulsive control (w0 = 0) has no finite counterpart")]
    ImpulsivePoint,

    #[error("feedback projection undefined: {0}")]
    Projection(String),

    #[error("feedback undefined at {state:?}: {reason}")]
    FeedbackDomain { state: Vec<f64>, reason: String },

    #[error("control grid is empty")]
    EmptyGrid,

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("descent rate is not strict at zero (beta(R, 0) > R fails)")]
    NotStrict,

    #[error("beta({radius}, t) stays above {level} up to t = {max_time}")]
    DecayFailure {
        radius: f64,
        level: f64,
        max_time: f64,
    },

    #[error("query outside the stored strip window: {0}")]
    WindowExhausted(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
