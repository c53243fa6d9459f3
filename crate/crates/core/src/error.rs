//! Error types shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed argument (bad bracket, bad range, non-positive tolerance, ...).
    #[error("argument error: {0}")]
    Argument(String),

    /// An objective returned a non-finite value during optimization or quadrature.
    #[error("evaluation error: objective returned {value} at x = {at}")]
    Evaluation { at: f64, value: f64 },

    /// Fading correlation of exactly ±1 leaves the channel reduction undefined.
    #[error("singular fading correlation: |{0}| = 1")]
    SingularCorrelation(f64),

    /// A derived quantity landed outside its admissible range for these inputs.
    #[error("parameter regime error: {quantity} = {value} is outside its admissible range")]
    ParameterRegime { quantity: &'static str, value: f64 },

    /// Both chain states are absorbing; no stationary distribution exists.
    #[error("absorbing chain: stay probabilities are both 1")]
    AbsorbingStates,

    /// Interval endpoints out of order.
    #[error("interval error: start {a} exceeds end {b}")]
    Interval { a: f64, b: f64 },

    /// Non-homogeneous intensity exceeded its declared bound (or the certified window).
    #[error("unbounded intensity on lookahead window: {0}")]
    UnboundedIntensity(String),

    /// Queue utilization at or above 1.
    #[error("unstable queue: utilization {0} is not below 1")]
    Instability(f64),

    /// Drop probability of 1 makes every transmission fail.
    #[error("total loss: drop probability is 1")]
    TotalLoss,

    /// No attempt can ever succeed under the configured failure probabilities.
    #[error("no delivery possible: {0}")]
    NoDelivery(String),

    /// Queue length blew past the divergence guard.
    #[error("queue divergence: length {len} exceeded guard {guard}")]
    Divergence { len: usize, guard: usize },

    /// Malformed or out-of-order environment event.
    #[error("invalid event: {0}")]
    Event(String),

    /// A configuration field failed validation. `key` names the offending field.
    #[error("validation error: {key}: {message}")]
    Validation { key: String, message: String },
}

impl Error {
    pub fn validation(key: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            key: key.to_string(),
            message: message.into(),
        }
    }
}
