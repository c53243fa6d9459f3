//! Closed-form average age of information for M/M/1 and D/M/1 update
//! streams over an error-prone channel with transmission collisions.
//!
//! The channel and collision effects enter as a multiplicative penalty on
//! the queueing term: `e^{exponent} / (1 - p_d)`, where the exponent encodes
//! the chance that another vehicle transmits within the collision window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::lambert_w0;

/// Queueing discipline of the update stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Discipline {
    /// Poisson arrivals, exponential service.
    Mm1,
    /// Deterministic arrivals, exponential service.
    Dm1,
}

impl Discipline {
    pub fn as_str(self) -> &'static str {
        match self {
            Discipline::Mm1 => "mm1",
            Discipline::Dm1 => "dm1",
        }
    }
}

impl std::str::FromStr for Discipline {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mm1" | "m/m/1" => Ok(Discipline::Mm1),
            "dm1" | "d/m/1" => Ok(Discipline::Dm1),
            other => Err(Error::validation(
                "discipline",
                format!("expected mm1 or dm1, got {other}"),
            )),
        }
    }
}

/// Choice of rate constant in the D/M/1 collision exponent.
///
/// The collision exponent is `rate · M(M-1) τ_c / 2`. For the M/M/1 stream
/// the rate is always the arrival rate λ. For D/M/1 the default uses the
/// deterministic interarrival gap `D = 1/λ` in its place; `arrival-rate`
/// keeps λ so that the exponent matches the collision-probability model for
/// both disciplines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentMode {
    #[default]
    DeterministicGap,
    ArrivalRate,
}

impl std::str::FromStr for ExponentMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "deterministic-gap" | "gap" => Ok(ExponentMode::DeterministicGap),
            "arrival-rate" | "rate" => Ok(ExponentMode::ArrivalRate),
            other => Err(Error::validation(
                "collision_exponent_mode",
                format!("expected deterministic-gap or arrival-rate, got {other}"),
            )),
        }
    }
}

/// Traffic-side model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficConfig {
    /// Base-station service rate μ, packets/s.
    pub service_rate: f64,
    /// Utilization ρ = λ/μ; must lie strictly inside (0, 1).
    pub utilization: f64,
    /// Vehicles per base station, M.
    pub fleet_size: u32,
    /// Number of base stations, N.
    pub station_count: u32,
    /// Slot interval τ_t, seconds.
    pub slot_interval: f64,
    /// Collision window τ_c, seconds (transmissions closer than this collide).
    pub collision_window: f64,
    /// Per-update channel drop probability p_d.
    pub drop_prob: f64,
    pub discipline: Discipline,
    pub collision_exponent_mode: ExponentMode,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            service_rate: 1.0,
            utilization: 0.5,
            fleet_size: 1,
            station_count: 1,
            slot_interval: 0.001,
            collision_window: 0.003,
            drop_prob: 0.0,
            discipline: Discipline::Mm1,
            collision_exponent_mode: ExponentMode::default(),
        }
    }
}

impl TrafficConfig {
    /// Arrival rate λ = ρ μ, packets/s.
    pub fn arrival_rate(&self) -> f64 {
        self.utilization * self.service_rate
    }

    /// Deterministic interarrival gap D = 1/λ, seconds.
    pub fn deterministic_gap(&self) -> f64 {
        1.0 / self.arrival_rate()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.service_rate > 0.0) || !self.service_rate.is_finite() {
            return Err(Error::validation(
                "traffic.service_rate",
                format!("must be positive and finite, got {}", self.service_rate),
            ));
        }
        if self.utilization >= 1.0 {
            return Err(Error::Instability(self.utilization));
        }
        if !(self.utilization > 0.0) {
            return Err(Error::validation(
                "traffic.utilization",
                format!("must lie in (0, 1), got {}", self.utilization),
            ));
        }
        if self.fleet_size < 1 {
            return Err(Error::validation("traffic.fleet_size", "must be >= 1"));
        }
        if self.station_count < 1 {
            return Err(Error::validation("traffic.station_count", "must be >= 1"));
        }
        if !(self.slot_interval >= 0.0) {
            return Err(Error::validation(
                "traffic.slot_interval",
                format!("must be >= 0, got {}", self.slot_interval),
            ));
        }
        if !(self.collision_window >= 0.0) {
            return Err(Error::validation(
                "traffic.collision_window",
                format!("must be >= 0, got {}", self.collision_window),
            ));
        }
        if self.drop_prob == 1.0 {
            return Err(Error::TotalLoss);
        }
        if !(0.0..1.0).contains(&self.drop_prob) {
            return Err(Error::validation(
                "traffic.drop_prob",
                format!("must lie in [0, 1), got {}", self.drop_prob),
            ));
        }
        Ok(())
    }

    /// Collision exponent `rate · M(M-1) τ_c / 2` for this configuration.
    fn collision_exponent(&self) -> f64 {
        let m = f64::from(self.fleet_size);
        let pairs = m * (m - 1.0) * self.collision_window / 2.0;
        let rate = match (self.discipline, self.collision_exponent_mode) {
            (Discipline::Mm1, _) => self.arrival_rate(),
            (Discipline::Dm1, ExponentMode::DeterministicGap) => self.deterministic_gap(),
            (Discipline::Dm1, ExponentMode::ArrivalRate) => self.arrival_rate(),
        };
        rate * pairs
    }

    /// Channel/collision penalty `e^{exponent} / (1 - p_d)`; 1 under neutral
    /// factors (single vehicle or zero window, lossless channel).
    pub fn penalty_factor(&self) -> f64 {
        self.collision_exponent().exp() / (1.0 - self.drop_prob)
    }
}

/// One additive component of the average age.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoiTerm {
    pub name: String,
    pub seconds: f64,
}

/// Average age with its term-by-term breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoiReport {
    /// Average age Δ, seconds. Always the exact sum of `term_breakdown`.
    pub average_aoi: f64,
    /// Collision probability p_c.
    pub collision_prob: f64,
    /// Channel drop probability p_d.
    pub drop_prob: f64,
    /// Multiplier applied to the queueing term.
    pub penalty_factor: f64,
    /// Geometric root β of the D/M/1 queue; absent for M/M/1.
    pub beta: Option<f64>,
    pub term_breakdown: Vec<AoiTerm>,
}

impl AoiReport {
    fn from_terms(
        terms: Vec<(&'static str, f64)>,
        collision_prob: f64,
        drop_prob: f64,
        penalty_factor: f64,
        beta: Option<f64>,
    ) -> Self {
        let term_breakdown: Vec<AoiTerm> = terms
            .into_iter()
            .map(|(name, seconds)| AoiTerm {
                name: name.to_string(),
                seconds,
            })
            .collect();
        let average_aoi = term_breakdown.iter().map(|t| t.seconds).sum();
        AoiReport {
            average_aoi,
            collision_prob,
            drop_prob,
            penalty_factor,
            beta,
            term_breakdown,
        }
    }
}

/// Probability that some pair of the `M` vehicles transmits within the
/// collision window: `1 - e^{-λ M(M-1) τ_c / 2}`.
pub fn collision_probability(
    arrival_rate: f64,
    fleet_size: u32,
    collision_window: f64,
) -> Result<f64> {
    if !(arrival_rate > 0.0) || !arrival_rate.is_finite() {
        return Err(Error::Argument(format!(
            "collision_probability: arrival rate must be positive, got {arrival_rate}"
        )));
    }
    if fleet_size < 1 {
        return Err(Error::Argument(
            "collision_probability: fleet size must be >= 1".into(),
        ));
    }
    if !(collision_window >= 0.0) {
        return Err(Error::Argument(format!(
            "collision_probability: collision window must be >= 0, got {collision_window}"
        )));
    }
    let m = f64::from(fleet_size);
    Ok(-(-arrival_rate * m * (m - 1.0) * collision_window / 2.0).exp_m1())
}

/// Expected waiting time conditioned on the preceding interarrival gap `x`:
/// `e^{-μ(1-ρ)x} / (μ(1-ρ)) · e^{λ M(M-1) τ_c / 2} / (1 - p_d)`.
///
/// Reduces to the lossless single-vehicle form when the penalty is neutral.
pub fn conditional_wait(x: f64, cfg: &TrafficConfig) -> Result<f64> {
    cfg.validate()?;
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "conditional_wait: gap must be >= 0, got {x}"
        )));
    }
    let mu = cfg.service_rate;
    let rho = cfg.utilization;
    let m = f64::from(cfg.fleet_size);
    let penalty = (cfg.arrival_rate() * m * (m - 1.0) * cfg.collision_window / 2.0).exp()
        / (1.0 - cfg.drop_prob);
    Ok((-mu * (1.0 - rho) * x).exp() / (mu * (1.0 - rho)) * penalty)
}

/// Closed form of `E[W X]`, the waiting time weighted by the interarrival
/// gap: `ρ / (μ²(1-ρ)) · e^{λ M(M-1) τ_c / 2} / (1 - p_d)`.
pub fn wait_interarrival_product(cfg: &TrafficConfig) -> Result<f64> {
    cfg.validate()?;
    let mu = cfg.service_rate;
    let rho = cfg.utilization;
    let m = f64::from(cfg.fleet_size);
    let penalty = (cfg.arrival_rate() * m * (m - 1.0) * cfg.collision_window / 2.0).exp()
        / (1.0 - cfg.drop_prob);
    Ok(rho / (mu * mu * (1.0 - rho)) * penalty)
}

/// Average age of the M/M/1 stream:
/// `Δ = (1/μ) (1 + 1/ρ + ρ²/(1-ρ) · e^{λ M(M-1) τ_c / 2} / (1 - p_d))`.
pub fn aoi_mm1(cfg: &TrafficConfig) -> Result<AoiReport> {
    cfg.validate()?;
    if cfg.discipline != Discipline::Mm1 {
        return Err(Error::validation(
            "traffic.discipline",
            "aoi_mm1 requires the mm1 discipline",
        ));
    }
    let mu = cfg.service_rate;
    let rho = cfg.utilization;
    let penalty = cfg.penalty_factor();
    let p_c = collision_probability(cfg.arrival_rate(), cfg.fleet_size, cfg.collision_window)?;
    Ok(AoiReport::from_terms(
        vec![
            ("service", 1.0 / mu),
            ("sampling", 1.0 / (rho * mu)),
            ("queueing", rho * rho / (1.0 - rho) * penalty / mu),
        ],
        p_c,
        cfg.drop_prob,
        penalty,
        None,
    ))
}

/// Geometric root β of the D/M/1 queue, the (0, 1) solution of
/// `β = e^{-(1-β)/ρ}`, computed as `-ρ W0(-(1/ρ) e^{-1/ρ})`.
///
/// The principal branch picks the non-trivial root: the other algebraic
/// solution is β = 1, the saturated queue.
pub fn dm1_beta(utilization: f64) -> Result<f64> {
    if !(utilization > 0.0 && utilization < 1.0) {
        return Err(Error::Domain(format!(
            "dm1_beta: utilization must lie in (0, 1), got {utilization}"
        )));
    }
    let inv_rho = 1.0 / utilization;
    let z = -inv_rho * (-inv_rho).exp();
    let beta = -utilization * lambert_w0(z)?;
    Ok(beta.clamp(0.0, 1.0))
}

/// Average age of the D/M/1 stream:
/// `Δ = (1/μ) (1 + 1/(2ρ) + β/(1-β) · e^{exponent} / (1 - p_d))`,
/// with the exponent controlled by [`ExponentMode`]. Under neutral factors
/// this equals `(1/μ) (1/(2ρ) + 1/(1-β))` exactly.
pub fn aoi_dm1(cfg: &TrafficConfig) -> Result<AoiReport> {
    cfg.validate()?;
    if cfg.discipline != Discipline::Dm1 {
        return Err(Error::validation(
            "traffic.discipline",
            "aoi_dm1 requires the dm1 discipline",
        ));
    }
    let mu = cfg.service_rate;
    let rho = cfg.utilization;
    let beta = dm1_beta(rho)?;
    let penalty = cfg.penalty_factor();
    let p_c = collision_probability(cfg.arrival_rate(), cfg.fleet_size, cfg.collision_window)?;
    Ok(AoiReport::from_terms(
        vec![
            ("service", 1.0 / mu),
            ("sampling", 1.0 / (2.0 * rho * mu)),
            ("queueing", beta / (1.0 - beta) * penalty / mu),
        ],
        p_c,
        cfg.drop_prob,
        penalty,
        Some(beta),
    ))
}

/// Dispatches on `cfg.discipline`.
pub fn average_aoi(cfg: &TrafficConfig) -> Result<AoiReport> {
    match cfg.discipline {
        Discipline::Mm1 => aoi_mm1(cfg),
        Discipline::Dm1 => aoi_dm1(cfg),
    }
}

/// First and second interarrival moments, mean service time, and utilization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentIdentities {
    /// `E[X] = 1/λ`.
    pub mean_interarrival: f64,
    /// `E[X²] = 2/λ²`.
    pub second_moment_interarrival: f64,
    /// `E[T_ser] = 1/μ`.
    pub mean_service: f64,
    /// `ρ = λ/μ`.
    pub utilization: f64,
}

pub fn moment_identities(arrival_rate: f64, service_rate: f64) -> Result<MomentIdentities> {
    if !(arrival_rate > 0.0) || !(service_rate > 0.0) {
        return Err(Error::Argument(format!(
            "moment_identities: rates must be positive, got lambda = {arrival_rate}, mu = {service_rate}"
        )));
    }
    Ok(MomentIdentities {
        mean_interarrival: 1.0 / arrival_rate,
        second_moment_interarrival: 2.0 / (arrival_rate * arrival_rate),
        mean_service: 1.0 / service_rate,
        utilization: arrival_rate / service_rate,
    })
}
