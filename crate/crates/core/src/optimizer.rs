//! Utilization optimization and the online rate controller.
//!
//! The controller tracks the environment (station count, fleet size, channel
//! drop probability) and recomputes the age-minimizing utilization whenever
//! any of them changes, emitting one extraction-rate decision per recompute.

use serde::{Deserialize, Serialize};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use crate::analytics::{average_aoi, Discipline, ExponentMode, TrafficConfig};
use crate::channel::ChannelDerived;
use crate::error::{Error, Result};
use crate::format_sig10;
use crate::numerics::minimize_unimodal;

/// Utilization search bracket.
pub const UTILIZATION_BRACKET: (f64, f64) = (0.02, 0.98);

/// Result of an optimal-rate search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalRate {
    /// Age-minimizing utilization ρ*.
    pub utilization: f64,
    /// Average age at ρ*.
    pub average_aoi: f64,
}

/// Minimizes the average age over ρ in [`UTILIZATION_BRACKET`], holding every
/// other field of `fixed` constant. `fixed.utilization` is ignored.
pub fn optimal_utilization(
    discipline: Discipline,
    fixed: &TrafficConfig,
    tol: f64,
) -> Result<OptimalRate> {
    let template = TrafficConfig {
        discipline,
        utilization: 0.5,
        ..fixed.clone()
    };
    template.validate()?;
    let objective = |rho: f64| {
        let cfg = TrafficConfig {
            utilization: rho,
            ..template.clone()
        };
        average_aoi(&cfg).map_or(f64::NAN, |r| r.average_aoi)
    };
    let r = minimize_unimodal(objective, UTILIZATION_BRACKET.0, UTILIZATION_BRACKET.1, tol)?;
    Ok(OptimalRate {
        utilization: r.argmin,
        average_aoi: r.min_value,
    })
}

/// Mean age obtained by drawing `samples` utilizations uniformly from
/// `range` instead of optimizing. Deterministic for a fixed seed.
pub fn random_strategy_aoi(
    discipline: Discipline,
    fixed: &TrafficConfig,
    samples: usize,
    range: (f64, f64),
    seed: u64,
) -> Result<f64> {
    let (lo, hi) = range;
    if samples < 1 {
        return Err(Error::Argument("samples must be >= 1".into()));
    }
    if !(0.0 < lo && lo < hi && hi < 1.0) {
        return Err(Error::Argument(format!(
            "utilization range must satisfy 0 < lo < hi < 1, got [{lo}, {hi}]"
        )));
    }
    let template = TrafficConfig {
        discipline,
        utilization: 0.5,
        ..fixed.clone()
    };
    template.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist =
        Uniform::new(lo, hi).map_err(|e| Error::Argument(format!("bad utilization range: {e}")))?;
    let mut total = 0.0;
    for _ in 0..samples {
        let cfg = TrafficConfig {
            utilization: dist.sample(&mut rng),
            ..template.clone()
        };
        total += average_aoi(&cfg)?.average_aoi;
    }
    Ok(total / samples as f64)
}

/// Kinds of environment change the controller reacts to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    FleetChange,
    StationChange,
    ChannelChange,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::FleetChange => "fleet-change",
            EventKind::StationChange => "station-change",
            EventKind::ChannelChange => "channel-change",
        }
    }
}

/// Event payload: a count for fleet/station changes, a derived channel for
/// channel changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EventValue {
    Count(u32),
    Channel(ChannelDerived),
}

/// One replayable environment event; `seq` orders the stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentEvent {
    pub seq: u64,
    pub kind: EventKind,
    pub value: EventValue,
}

impl EnvironmentEvent {
    /// Parses one line of the newline-delimited replay format.
    pub fn parse_line(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::Event(format!("unparseable event: {e}")))
    }
}

/// Fixed parameters the controller optimizes against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    pub service_rate: f64,
    pub slot_interval: f64,
    pub collision_window: f64,
    pub discipline: Discipline,
    pub collision_exponent_mode: ExponentMode,
    /// Optimization tolerance on ρ*.
    pub tol: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            service_rate: 1.0,
            slot_interval: 0.001,
            collision_window: 0.003,
            discipline: Discipline::Mm1,
            collision_exponent_mode: ExponentMode::default(),
            tol: 1e-6,
        }
    }
}

/// One logged rate decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub seq: u64,
    /// Event kind that triggered the recompute ("init" for the first one).
    pub kind: String,
    pub rho_star: f64,
    pub lambda_star: f64,
    pub aoi_star: f64,
}

/// Controller environment and decision history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub current_utilization: f64,
    pub optimal_utilization: f64,
    pub station_count: u32,
    pub fleet_size: u32,
    /// Drop probability of the channel currently in effect.
    pub drop_prob: f64,
    /// Sequence index of the last recompute.
    pub last_recompute: u64,
    pub decision_log: Vec<Decision>,
}

impl ControllerState {
    /// Builds the initial state and runs the first optimization, logged with
    /// kind `init` at sequence 0.
    pub fn new(
        station_count: u32,
        fleet_size: u32,
        drop_prob: f64,
        params: &ControllerParams,
    ) -> Result<Self> {
        let mut state = ControllerState {
            current_utilization: 0.0,
            optimal_utilization: 0.0,
            station_count,
            fleet_size,
            drop_prob,
            last_recompute: 0,
            decision_log: Vec::new(),
        };
        state.recompute(0, "init", params)?;
        Ok(state)
    }

    fn traffic(&self, params: &ControllerParams) -> TrafficConfig {
        TrafficConfig {
            service_rate: params.service_rate,
            utilization: 0.5, // placeholder; overwritten by the search
            fleet_size: self.fleet_size,
            station_count: self.station_count,
            slot_interval: params.slot_interval,
            collision_window: params.collision_window,
            drop_prob: self.drop_prob,
            discipline: params.discipline,
            collision_exponent_mode: params.collision_exponent_mode,
        }
    }

    fn recompute(&mut self, seq: u64, kind: &str, params: &ControllerParams) -> Result<()> {
        let best = optimal_utilization(params.discipline, &self.traffic(params), params.tol)?;
        self.optimal_utilization = best.utilization;
        self.current_utilization = best.utilization;
        self.last_recompute = seq;
        self.decision_log.push(Decision {
            seq,
            kind: kind.to_string(),
            rho_star: best.utilization,
            lambda_star: best.utilization * params.service_rate,
            aoi_star: best.average_aoi,
        });
        Ok(())
    }

    /// Applies one environment event. A change in any tracked quantity
    /// triggers a recompute and one decision-log entry; an event that leaves
    /// the environment unchanged is a no-op. Returns whether a decision was
    /// made.
    pub fn step(&mut self, event: &EnvironmentEvent, params: &ControllerParams) -> Result<bool> {
        if let Some(last) = self.decision_log.last() {
            if event.seq < last.seq {
                return Err(Error::Event(format!(
                    "event sequence {} precedes last decision {}",
                    event.seq, last.seq
                )));
            }
        }
        let changed = match (event.kind, &event.value) {
            (EventKind::FleetChange, EventValue::Count(m)) => {
                if *m < 1 {
                    return Err(Error::Event("fleet size must be >= 1".into()));
                }
                let changed = *m != self.fleet_size;
                self.fleet_size = *m;
                changed
            }
            (EventKind::StationChange, EventValue::Count(n)) => {
                if *n < 1 {
                    return Err(Error::Event("station count must be >= 1".into()));
                }
                let changed = *n != self.station_count;
                self.station_count = *n;
                changed
            }
            (EventKind::ChannelChange, EventValue::Channel(ch)) => {
                if !(0.0..1.0).contains(&ch.drop_prob) {
                    return Err(Error::Event(format!(
                        "channel drop probability {} outside [0, 1)",
                        ch.drop_prob
                    )));
                }
                let changed = ch.drop_prob != self.drop_prob;
                self.drop_prob = ch.drop_prob;
                changed
            }
            (kind, _) => {
                return Err(Error::Event(format!(
                    "value type does not match event kind {}",
                    kind.as_str()
                )));
            }
        };
        if changed {
            self.recompute(event.seq, event.kind.as_str(), params)?;
        }
        Ok(changed)
    }

    /// Renders the decision log in its CSV export format.
    pub fn decision_csv(&self) -> String {
        let mut out = String::from("seq,kind,rho_star,lambda_star,aoi_star\n");
        for d in &self.decision_log {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                d.seq,
                d.kind,
                format_sig10(d.rho_star),
                format_sig10(d.lambda_star),
                format_sig10(d.aoi_star)
            ));
        }
        out
    }
}
