//! Two-state Markov channel reduction.
//!
//! Maps physical mobility and fading inputs (speed, carrier, frame rate,
//! fading margin) to the stay probabilities of a poor/ideal channel chain and
//! the stationary per-update drop probability.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bessel_j0, marcum_q1, marcum_q1_complement};

/// Propagation speed used for the Doppler shift, m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Physical channel inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Vehicle speed, m/s.
    pub vehicle_speed: f64,
    /// Carrier frequency, Hz.
    pub carrier_frequency: f64,
    /// Link bit rate, bits/s.
    pub bit_rate: f64,
    /// Frame size, bits.
    pub frame_size: f64,
    /// Fading margin F (mean SNR over decoding threshold), dimensionless.
    pub fading_margin: f64,
    /// Probability a frame fails while the channel is poor.
    #[serde(default = "default_fail_poor")]
    pub fail_prob_poor: f64,
    /// Probability a frame fails while the channel is ideal.
    #[serde(default)]
    pub fail_prob_ideal: f64,
}

fn default_fail_poor() -> f64 {
    1.0
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.vehicle_speed >= 0.0) {
            return Err(Error::validation(
                "channel.vehicle_speed",
                format!("must be >= 0, got {}", self.vehicle_speed),
            ));
        }
        if !(self.carrier_frequency > 0.0) {
            return Err(Error::validation(
                "channel.carrier_frequency",
                format!("must be > 0, got {}", self.carrier_frequency),
            ));
        }
        if !(self.bit_rate > 0.0) {
            return Err(Error::validation(
                "channel.bit_rate",
                format!("must be > 0, got {}", self.bit_rate),
            ));
        }
        if !(self.frame_size > 0.0) {
            return Err(Error::validation(
                "channel.frame_size",
                format!("must be > 0, got {}", self.frame_size),
            ));
        }
        if !(self.fading_margin > 0.0) {
            return Err(Error::validation(
                "channel.fading_margin",
                format!("must be > 0, got {}", self.fading_margin),
            ));
        }
        if !(0.0..=1.0).contains(&self.fail_prob_ideal)
            || !(0.0..=1.0).contains(&self.fail_prob_poor)
            || self.fail_prob_ideal > self.fail_prob_poor
        {
            return Err(Error::validation(
                "channel.fail_prob",
                format!(
                    "need 0 <= fail_prob_ideal <= fail_prob_poor <= 1, got ideal {} poor {}",
                    self.fail_prob_ideal, self.fail_prob_poor
                ),
            ));
        }
        Ok(())
    }

    /// Frame transmission rate θ = bit_rate / frame_size, frames/s.
    pub fn frame_rate(&self) -> f64 {
        self.bit_rate / self.frame_size
    }

    /// Duration of one slot (one frame per slot), seconds.
    pub fn slot_length(&self) -> f64 {
        self.frame_size / self.bit_rate
    }
}

/// Quantities derived from a [`ChannelConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelDerived {
    /// Doppler shift f_d, Hz.
    pub doppler_shift: f64,
    /// Frame rate θ, frames/s.
    pub frame_rate: f64,
    /// Correlation of consecutive fading-amplitude samples, J0(2π f_d / θ).
    pub fading_correlation: f64,
    /// η = sqrt(2 / (F (1 - corr²))).
    pub eta: f64,
    /// Average transmission error probability 1 - e^{-1/F}.
    pub avg_error_prob: f64,
    /// Probability of staying in the poor state.
    pub stay_poor: f64,
    /// Probability of staying in the ideal state.
    pub stay_ideal: f64,
    /// Stationary per-update drop probability.
    pub drop_prob: f64,
}

/// Doppler shift `f_d = carrier · speed / c`.
pub fn doppler_shift(speed: f64, carrier: f64) -> Result<f64> {
    if !speed.is_finite() || speed < 0.0 {
        return Err(Error::Domain(format!(
            "doppler_shift: speed {speed} must be finite and >= 0"
        )));
    }
    if !carrier.is_finite() || carrier <= 0.0 {
        return Err(Error::Domain(format!(
            "doppler_shift: carrier {carrier} must be finite and > 0"
        )));
    }
    Ok(carrier * speed / SPEED_OF_LIGHT)
}

/// Stationary distribution of the two-state chain with the given stay
/// probabilities. Returns `(pi_poor, pi_ideal)`.
pub fn stationary_distribution(stay_poor: f64, stay_ideal: f64) -> Result<(f64, f64)> {
    for (name, p) in [("stay_poor", stay_poor), ("stay_ideal", stay_ideal)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ParameterRegime {
                quantity: name,
                value: p,
            });
        }
    }
    let denom = 2.0 - stay_poor - stay_ideal;
    if denom <= 0.0 {
        return Err(Error::AbsorbingStates);
    }
    let pi_poor = (1.0 - stay_ideal) / denom;
    Ok((pi_poor, 1.0 - pi_poor))
}

/// Per-update drop probability: the per-state frame-failure probabilities
/// mixed by the stationary occupancy of the chain.
pub fn drop_probability(
    fail_poor: f64,
    fail_ideal: f64,
    stay_poor: f64,
    stay_ideal: f64,
) -> Result<f64> {
    for (name, p) in [
        ("fail_prob_poor", fail_poor),
        ("fail_prob_ideal", fail_ideal),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ParameterRegime {
                quantity: name,
                value: p,
            });
        }
    }
    let (pi_poor, pi_ideal) = stationary_distribution(stay_poor, stay_ideal)?;
    Ok(fail_poor * pi_poor + fail_ideal * pi_ideal)
}

// clamp tiny excursions produced by floating-point noise; larger ones are a
// genuine regime violation
fn checked_probability(quantity: &'static str, value: f64) -> Result<f64> {
    const SLACK: f64 = 1e-12;
    if value.is_finite() && (-SLACK..=1.0 + SLACK).contains(&value) {
        Ok(value.clamp(0.0, 1.0))
    } else {
        Err(Error::ParameterRegime { quantity, value })
    }
}

/// Derives the full set of chain parameters from the physical inputs.
///
/// The poor-state stay probability uses the asymmetric Marcum-Q difference
/// `Q1(η, corr·η) - Q1(corr·η, η)`; the ideal-state stay probability is the
/// unique value that makes the chain's stationary poor-state mass equal the
/// average error probability, which [`stationary_distribution`] then
/// reproduces exactly.
pub fn derive_channel(cfg: &ChannelConfig) -> Result<ChannelDerived> {
    cfg.validate()?;
    let fd = doppler_shift(cfg.vehicle_speed, cfg.carrier_frequency)?;
    let theta = cfg.frame_rate();
    let corr = bessel_j0(2.0 * std::f64::consts::PI * fd / theta)?;

    if (1.0 - corr * corr).abs() < 1e-15 || corr.abs() >= 1.0 {
        return Err(Error::SingularCorrelation(corr));
    }
    if corr <= 0.0 {
        // consecutive samples must be positively correlated for the
        // two-state reduction to apply
        return Err(Error::ParameterRegime {
            quantity: "fading_correlation",
            value: corr,
        });
    }

    let margin = cfg.fading_margin;
    let eta = (2.0 / (margin * (1.0 - corr * corr))).sqrt();
    let avg_error_prob = -(-1.0 / margin).exp_m1(); // 1 - e^{-1/F}
                                                    // Q1(η, ρη) - Q1(ρη, η); for small η go through the complements so the
                                                    // difference keeps its relative accuracy in the error-free limit
    let q_diff = if eta <= 10.0 {
        marcum_q1_complement(corr * eta, eta)? - marcum_q1_complement(eta, corr * eta)?
    } else {
        marcum_q1(eta, corr * eta)? - marcum_q1(corr * eta, eta)?
    };
    let stay_poor = checked_probability("stay_poor", 1.0 - q_diff / (1.0 / margin).exp_m1())?;
    let stay_ideal = checked_probability(
        "stay_ideal",
        (1.0 - avg_error_prob * (2.0 - stay_poor)) / (1.0 - avg_error_prob),
    )?;

    let (pi_poor, _) = stationary_distribution(stay_poor, stay_ideal)?;
    if (pi_poor - avg_error_prob).abs() > 1e-9 {
        return Err(Error::ParameterRegime {
            quantity: "stationary_poor_mass",
            value: pi_poor,
        });
    }

    let drop_prob = drop_probability(
        cfg.fail_prob_poor,
        cfg.fail_prob_ideal,
        stay_poor,
        stay_ideal,
    )?;

    Ok(ChannelDerived {
        doppler_shift: fd,
        frame_rate: theta,
        fading_correlation: corr,
        eta,
        avg_error_prob,
        stay_poor,
        stay_ideal,
        drop_prob,
    })
}
