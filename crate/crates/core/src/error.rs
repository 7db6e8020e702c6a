use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel family `{family}` has no pointwise density")]
    NoDensity { family: &'static str },

    #[error("z = {z} outside transform domain: violates {side} abscissa {bound}")]
    Domain {
        z: f64,
        bound: f64,
        side: &'static str,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "no tangency in the transform domain (tangency hypothesis violated): \
         residual sign {sign_low:+} near lower abscissa, {sign_high:+} near upper abscissa"
    )]
    NoTangency { sign_low: f64, sign_high: f64 },

    #[error("critical speed on the {branch} branch not bracketed within |c| <= {range}")]
    SpeedNotBracketed { branch: &'static str, range: f64 },

    #[error("damped iteration for the local expansion does not contract at s = {s} (ratio {ratio:.3}); try a smaller |s|")]
    NoContraction { s: f64, ratio: f64 },

    #[error("fundamental-solution gate failed at z = {z}: {reason}")]
    GateFailed { z: f64, reason: String },

    #[error("symbol grid too short: tail weight {tail:e} exceeds {limit:e} at t = {t}; extend the z-grid")]
    GridExtension { tail: f64, limit: f64, t: f64 },

    #[error("history of the fundamental solution required: t = {t} must exceed the delay {h}")]
    HistoryRequired { t: f64, h: f64 },

    #[error("time step {dt} does not divide the delay {h}")]
    StepDoesNotDivideDelay { dt: f64, h: f64 },

    #[error("solution blew up (non-finite values); last healthy time t = {last_healthy}")]
    Blowup { last_healthy: f64 },

    #[error("initial data not ordered: {0}")]
    Ordering(String),

    #[error("too few samples for fit: {got} attained, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
