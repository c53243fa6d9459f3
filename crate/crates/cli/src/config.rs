//! Config-file ingestion and flag merging.
//!
//! The config file is TOML with `[traffic]`, `[channel]`, and `[sim]`
//! sections whose keys match the corresponding struct fields in snake case.
//! Precedence: built-in defaults, then file values, then command-line flags.

use std::path::Path;

use serde::Deserialize;

use aoi_core::analytics::{Discipline, ExponentMode, TrafficConfig};
use aoi_core::channel::ChannelConfig;
use aoi_core::sim::{Fidelity, MarkovChannelParams, SimConfig};

use crate::error::{CliError, CliResult};
use crate::TrafficFlags;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub traffic: TrafficSection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub sim: SimSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSection {
    pub service_rate: Option<f64>,
    pub utilization: Option<f64>,
    pub fleet_size: Option<u32>,
    pub station_count: Option<u32>,
    pub slot_interval: Option<f64>,
    pub collision_window: Option<f64>,
    pub drop_prob: Option<f64>,
    pub discipline: Option<String>,
    pub collision_exponent_mode: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub vehicle_speed: Option<f64>,
    pub carrier_frequency: Option<f64>,
    pub bit_rate: Option<f64>,
    pub frame_size: Option<f64>,
    pub fading_margin: Option<f64>,
    pub fail_prob_poor: Option<f64>,
    pub fail_prob_ideal: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub fidelity: Option<String>,
    pub horizon: Option<u64>,
    pub warmup: Option<u64>,
    pub replications: Option<u32>,
    pub seed: Option<u64>,
    pub queue_guard: Option<usize>,
    pub stay_poor: Option<f64>,
    pub stay_ideal: Option<f64>,
    pub fail_prob_poor: Option<f64>,
    pub fail_prob_ideal: Option<f64>,
}

pub fn load(path: Option<&Path>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(&format!("reading {}", path.display()), e))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
}

impl FileConfig {
    /// Channel config, if the file provides the five physical inputs.
    pub fn channel_config(&self) -> Option<ChannelConfig> {
        Some(ChannelConfig {
            vehicle_speed: self.channel.vehicle_speed?,
            carrier_frequency: self.channel.carrier_frequency?,
            bit_rate: self.channel.bit_rate?,
            frame_size: self.channel.frame_size?,
            fading_margin: self.channel.fading_margin?,
            fail_prob_poor: self.channel.fail_prob_poor.unwrap_or(1.0),
            fail_prob_ideal: self.channel.fail_prob_ideal.unwrap_or(0.0),
        })
    }

    /// Resolves the traffic model from defaults, file, and flags.
    pub fn traffic(&self, flags: &TrafficFlags) -> CliResult<TrafficConfig> {
        let defaults = TrafficConfig::default();

        let discipline = match (&flags.model, &self.traffic.discipline) {
            (Some(s), _) => s.parse::<Discipline>()?,
            (None, Some(s)) => s.parse::<Discipline>()?,
            (None, None) => defaults.discipline,
        };
        let collision_exponent_mode =
            match (&flags.exponent_mode, &self.traffic.collision_exponent_mode) {
                (Some(s), _) => s.parse::<ExponentMode>()?,
                (None, Some(s)) => s.parse::<ExponentMode>()?,
                (None, None) => defaults.collision_exponent_mode,
            };

        // slot interval falls back to one frame transmission time when a
        // channel section is available
        let slot_interval = flags
            .slot
            .or(self.traffic.slot_interval)
            .or_else(|| self.channel_config().map(|c| c.slot_length()))
            .unwrap_or(defaults.slot_interval);
        let collision_window = flags
            .tau_c
            .or(self.traffic.collision_window)
            .unwrap_or(3.0 * slot_interval);

        let cfg = TrafficConfig {
            service_rate: flags
                .mu
                .or(self.traffic.service_rate)
                .unwrap_or(defaults.service_rate),
            utilization: flags
                .rho
                .or(self.traffic.utilization)
                .unwrap_or(defaults.utilization),
            fleet_size: flags
                .fleet
                .or(self.traffic.fleet_size)
                .unwrap_or(defaults.fleet_size),
            station_count: flags
                .stations
                .or(self.traffic.station_count)
                .unwrap_or(defaults.station_count),
            slot_interval,
            collision_window,
            drop_prob: flags
                .pd
                .or(self.traffic.drop_prob)
                .unwrap_or(defaults.drop_prob),
            discipline,
            collision_exponent_mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolves the simulation run description.
    #[allow(clippy::too_many_arguments)]
    pub fn sim(
        &self,
        traffic: TrafficConfig,
        fidelity_flag: Option<&str>,
        horizon: Option<u64>,
        warmup: Option<u64>,
        replications: Option<u32>,
        seed: Option<u64>,
        queue_guard: Option<usize>,
        direct: &DirectChannelFlags,
    ) -> CliResult<SimConfig> {
        let fidelity = match (fidelity_flag, &self.sim.fidelity) {
            (Some(s), _) => s.parse::<Fidelity>()?,
            (None, Some(s)) => s.parse::<Fidelity>()?,
            (None, None) => Fidelity::GeometricRetry,
        };

        let channel = match fidelity {
            Fidelity::GeometricRetry => None,
            Fidelity::MarkovChannel => Some(self.markov_params(direct)?),
        };

        let cfg = SimConfig {
            traffic,
            channel,
            fidelity,
            horizon: horizon.or(self.sim.horizon).unwrap_or(100_000),
            warmup: warmup.or(self.sim.warmup).unwrap_or(10_000),
            replications: replications.or(self.sim.replications).unwrap_or(10),
            seed: seed.or(self.sim.seed).unwrap_or(0),
            queue_guard: queue_guard.or(self.sim.queue_guard).unwrap_or(1_000_000),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Markov-channel parameters, either given directly (flags or `[sim]`
    /// keys) or derived from the `[channel]` section.
    fn markov_params(&self, direct: &DirectChannelFlags) -> CliResult<MarkovChannelParams> {
        let stay_poor = direct.stay_poor.or(self.sim.stay_poor);
        let stay_ideal = direct.stay_ideal.or(self.sim.stay_ideal);
        match (stay_poor, stay_ideal) {
            (Some(stay_poor), Some(stay_ideal)) => Ok(MarkovChannelParams {
                stay_poor,
                stay_ideal,
                fail_prob_poor: direct.vl.or(self.sim.fail_prob_poor).unwrap_or(1.0),
                fail_prob_ideal: direct.ll.or(self.sim.fail_prob_ideal).unwrap_or(0.0),
            }),
            (None, None) => {
                let ch = self.channel_config().ok_or_else(|| {
                    CliError::Validation(
                        "sim.channel: markov-channel fidelity needs either stay_poor/stay_ideal \
                         or a complete [channel] section"
                            .into(),
                    )
                })?;
                let derived = aoi_core::channel::derive_channel(&ch)?;
                Ok(MarkovChannelParams {
                    stay_poor: derived.stay_poor,
                    stay_ideal: derived.stay_ideal,
                    fail_prob_poor: direct.vl.unwrap_or(ch.fail_prob_poor),
                    fail_prob_ideal: direct.ll.unwrap_or(ch.fail_prob_ideal),
                })
            }
            _ => Err(CliError::Validation(
                "sim.stay_poor/sim.stay_ideal: both must be given together".into(),
            )),
        }
    }
}

/// Direct two-state channel overrides for `simulate`.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct DirectChannelFlags {
    /// Poor-state stay probability (with --stay-ideal, bypasses derivation)
    #[arg(long)]
    pub stay_poor: Option<f64>,
    /// Ideal-state stay probability
    #[arg(long)]
    pub stay_ideal: Option<f64>,
    /// Frame failure probability in the poor state
    #[arg(long)]
    pub vl: Option<f64>,
    /// Frame failure probability in the ideal state
    #[arg(long)]
    pub ll: Option<f64>,
}
