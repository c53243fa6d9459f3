//! Average age-of-information toolkit for vehicle-to-infrastructure update
//! streams served by M/M/1 and D/M/1 queues over an error-prone two-state
//! channel with transmission collisions.
//!
//! - [`numerics`]: special functions (Bessel J0, Marcum Q1, Lambert W0) and a
//!   golden-section minimizer.
//! - [`channel`]: physical inputs → two-state chain parameters and the
//!   per-update drop probability.
//! - [`arrivals`]: seedable point-process samplers for the extraction stream.
//! - [`analytics`]: closed-form average age with its term breakdown.
//! - [`optimizer`]: age-minimizing utilization search, the online rate
//!   controller, and the random-strategy baseline.
//! - [`sim`]: discrete-event Monte-Carlo oracle validating the closed forms.

// `!(x > 0.0)`-style range checks are deliberate: they reject NaN together
// with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod arrivals;
pub mod channel;
pub mod error;
pub mod numerics;
pub mod optimizer;
pub mod sim;

pub use error::{Error, Result};

/// Formats a number with 10 significant digits, locale-independent, for CSV
/// output that must be byte-stable across platforms.
pub fn format_sig10(x: f64) -> String {
    format!("{x:.9e}")
}
