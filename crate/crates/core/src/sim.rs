//! Discrete-event Monte-Carlo oracle for the closed-form age expressions.
//!
//! Simulates a FCFS single-server infinite-buffer queue serving one tagged
//! update stream. Failed transmission attempts keep the packet at the head
//! of the queue and redraw its service time. The age process is integrated
//! exactly as a piecewise-linear sawtooth that resets to the packet's system
//! time at each delivery.
//!
//! Two fidelities: `geometric-retry` draws per-attempt success with the
//! closed-form probability `(1-p_c)(1-p_d)`; `markov-channel` evolves the
//! slotted two-state chain and an explicit interferer point process instead.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{collision_probability, Discipline, TrafficConfig};
use crate::arrivals::{ArrivalProcess, ArrivalSampler};
use crate::channel::{stationary_distribution, ChannelDerived};
use crate::error::{Error, Result};

/// Channel-model fidelity of the transmission attempts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fidelity {
    /// Per-attempt success probability `(1-p_c)(1-p_d)` from the closed form.
    GeometricRetry,
    /// Slotted two-state channel plus an explicit interferer stream.
    MarkovChannel,
}

impl std::str::FromStr for Fidelity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "geometric-retry" | "geometric" => Ok(Fidelity::GeometricRetry),
            "markov-channel" | "markov" => Ok(Fidelity::MarkovChannel),
            other => Err(Error::validation(
                "sim.fidelity",
                format!("expected geometric-retry or markov-channel, got {other}"),
            )),
        }
    }
}

/// Direct two-state channel parameters for the markov fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovChannelParams {
    pub stay_poor: f64,
    pub stay_ideal: f64,
    pub fail_prob_poor: f64,
    pub fail_prob_ideal: f64,
}

impl From<&ChannelDerived> for MarkovChannelParams {
    fn from(d: &ChannelDerived) -> Self {
        MarkovChannelParams {
            stay_poor: d.stay_poor,
            stay_ideal: d.stay_ideal,
            fail_prob_poor: 1.0,
            fail_prob_ideal: 0.0,
        }
    }
}

impl MarkovChannelParams {
    pub fn validate(&self) -> Result<()> {
        for (key, p) in [
            ("sim.stay_poor", self.stay_poor),
            ("sim.stay_ideal", self.stay_ideal),
            ("sim.fail_prob_poor", self.fail_prob_poor),
            ("sim.fail_prob_ideal", self.fail_prob_ideal),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(
                    key,
                    format!("must lie in [0, 1], got {p}"),
                ));
            }
        }
        if self.fail_prob_poor == 1.0 && self.fail_prob_ideal == 1.0 {
            return Err(Error::NoDelivery(
                "every frame fails in both channel states".into(),
            ));
        }
        Ok(())
    }
}

fn default_queue_guard() -> usize {
    1_000_000
}

/// Simulation run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub traffic: TrafficConfig,
    /// Required for the markov-channel fidelity; ignored otherwise.
    pub channel: Option<MarkovChannelParams>,
    pub fidelity: Fidelity,
    /// Number of tagged arrivals to simulate.
    pub horizon: u64,
    /// Number of leading deliveries discarded before measuring.
    pub warmup: u64,
    pub replications: u32,
    pub seed: u64,
    /// Divergence guard on the queue length.
    #[serde(default = "default_queue_guard")]
    pub queue_guard: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.traffic.drop_prob == 1.0 {
            return Err(Error::NoDelivery("drop probability is 1".into()));
        }
        self.traffic.validate()?;
        if self.horizon <= self.warmup {
            return Err(Error::validation(
                "sim.horizon",
                format!(
                    "horizon ({}) must exceed warmup ({})",
                    self.horizon, self.warmup
                ),
            ));
        }
        if self.replications < 1 {
            return Err(Error::validation("sim.replications", "must be >= 1"));
        }
        if self.queue_guard < 1 {
            return Err(Error::validation("sim.queue_guard", "must be >= 1"));
        }
        match self.fidelity {
            Fidelity::GeometricRetry => {}
            Fidelity::MarkovChannel => {
                let ch = self.channel.as_ref().ok_or_else(|| {
                    Error::validation(
                        "sim.channel",
                        "markov-channel fidelity needs channel parameters",
                    )
                })?;
                ch.validate()?;
                if !(self.traffic.slot_interval > 0.0) {
                    return Err(Error::validation(
                        "traffic.slot_interval",
                        "must be > 0 for the markov-channel fidelity",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Per-replication measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationStats {
    pub empirical_aoi: f64,
    pub mean_wait: f64,
    pub mean_system_time: f64,
    pub mean_attempts: f64,
    pub channel_poor_fraction: Option<f64>,
    pub delivered: u64,
}

/// Aggregated simulation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Time-average age over the post-warmup window, averaged over
    /// replications.
    pub empirical_aoi: f64,
    /// Standard error of the per-replication ages (0 for one replication).
    pub aoi_stderr: f64,
    pub mean_wait: f64,
    pub mean_system_time: f64,
    pub mean_attempts: f64,
    pub channel_poor_fraction: Option<f64>,
    /// Total measured deliveries across replications.
    pub delivered: u64,
    pub per_replication: Vec<ReplicationStats>,
}

/// Decimated piecewise-linear age trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeTrace {
    /// `(time, age)` vertices; delivery resets appear as two points sharing
    /// one timestamp.
    pub points: Vec<(f64, f64)>,
    /// Time-average age of the underlying (undecimated) process.
    pub empirical_aoi: f64,
    /// Length of the measurement window.
    pub elapsed: f64,
    /// |trapezoid integral of `points` - exact age integral|.
    pub decimation_error: f64,
}

struct SlottedChannel {
    rng: ChaCha8Rng,
    slot_len: f64,
    stay_poor: f64,
    stay_ideal: f64,
    slot: u64,
    poor: bool,
    poor_slots: u64,
    total_slots: u64,
}

impl SlottedChannel {
    fn new(params: &MarkovChannelParams, slot_len: f64, mut rng: ChaCha8Rng) -> Result<Self> {
        let (pi_poor, _) = stationary_distribution(params.stay_poor, params.stay_ideal)?;
        let poor = rng.random::<f64>() < pi_poor;
        Ok(SlottedChannel {
            rng,
            slot_len,
            stay_poor: params.stay_poor,
            stay_ideal: params.stay_ideal,
            slot: 0,
            poor,
            poor_slots: u64::from(poor),
            total_slots: 1,
        })
    }

    /// Channel state in the slot containing time `t` (t never decreases
    /// across calls).
    fn poor_at(&mut self, t: f64) -> bool {
        let target = (t / self.slot_len) as u64;
        while self.slot < target {
            let stay = if self.poor {
                self.stay_poor
            } else {
                self.stay_ideal
            };
            if self.rng.random::<f64>() >= stay {
                self.poor = !self.poor;
            }
            self.slot += 1;
            self.total_slots += 1;
            self.poor_slots += u64::from(self.poor);
        }
        self.poor
    }

    fn poor_fraction(&self) -> f64 {
        self.poor_slots as f64 / self.total_slots as f64
    }
}

/// Lazily generated Poisson stream of interfering transmissions.
struct InterfererStream {
    sampler: ArrivalSampler,
    last: f64,
    pending: VecDeque<f64>,
}

impl InterfererStream {
    /// Whether any interferer event falls inside `[lo, hi]`; `lo` never
    /// decreases across calls.
    fn any_within(&mut self, lo: f64, hi: f64) -> Result<bool> {
        while self.last < hi {
            let gap = self.sampler.sample_interarrival(self.last.max(0.0))?;
            self.last += gap;
            self.pending.push_back(self.last);
        }
        while let Some(&front) = self.pending.front() {
            if front < lo {
                self.pending.pop_front();
            } else {
                break;
            }
        }
        Ok(self.pending.front().is_some_and(|&f| f <= hi))
    }
}

// one instance per replication; the size imbalance between variants is fine
#[allow(clippy::large_enum_variant)]
enum AttemptModel {
    Geometric {
        success_prob: f64,
    },
    Markov {
        chain: SlottedChannel,
        interferers: Option<InterfererStream>,
        fail_poor: f64,
        fail_ideal: f64,
        collision_window: f64,
    },
}

struct RepOutcome {
    stats: ReplicationStats,
    integral: f64,
    elapsed: f64,
    window_start: f64,
    window_age0: f64,
    deliveries: Vec<(f64, f64)>,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn run_replication(cfg: &SimConfig, rep: u64, keep_deliveries: bool) -> Result<RepOutcome> {
    let traffic = &cfg.traffic;
    let lambda = traffic.arrival_rate();
    let horizon = cfg.horizon;
    let warmup = cfg.warmup;

    let arrival_proc = match traffic.discipline {
        Discipline::Mm1 => ArrivalProcess::homogeneous(lambda, cfg.seed)?,
        Discipline::Dm1 => ArrivalProcess::deterministic(lambda, cfg.seed)?,
    };
    let mut arrivals = arrival_proc.sampler_for_stream(rep * 8);
    let mut service_rng = stream_rng(cfg.seed, rep * 8 + 1);
    let service = Exp::new(traffic.service_rate).expect("service rate validated");
    let mut outcome_rng = stream_rng(cfg.seed, rep * 8 + 2);

    let mut model = match cfg.fidelity {
        Fidelity::GeometricRetry => {
            let p_c = collision_probability(lambda, traffic.fleet_size, traffic.collision_window)?;
            let success_prob = (1.0 - p_c) * (1.0 - traffic.drop_prob);
            if !(success_prob > 0.0) {
                return Err(Error::NoDelivery(format!(
                    "per-attempt success probability is {success_prob}"
                )));
            }
            AttemptModel::Geometric { success_prob }
        }
        Fidelity::MarkovChannel => {
            let params = cfg.channel.as_ref().expect("validated");
            let chain = SlottedChannel::new(
                params,
                traffic.slot_interval,
                stream_rng(cfg.seed, rep * 8 + 4),
            )?;
            let interferers = if traffic.fleet_size > 1 {
                let rate = f64::from(traffic.fleet_size - 1) * lambda;
                Some(InterfererStream {
                    sampler: ArrivalProcess::homogeneous(rate, cfg.seed)?
                        .sampler_for_stream(rep * 8 + 3),
                    last: 0.0,
                    pending: VecDeque::new(),
                })
            } else {
                None
            };
            AttemptModel::Markov {
                chain,
                interferers,
                fail_poor: params.fail_prob_poor,
                fail_ideal: params.fail_prob_ideal,
                collision_window: traffic.collision_window,
            }
        }
    };

    let mut clock_arr = 0.0_f64;
    let mut prev_delivery = 0.0_f64;
    let mut prev_system_time = 0.0_f64;
    let mut in_flight: VecDeque<f64> = VecDeque::new();

    let mut window_start = 0.0_f64;
    let mut window_age0 = 0.0_f64;
    let mut integral = 0.0_f64;
    let mut sum_wait = 0.0_f64;
    let mut sum_system = 0.0_f64;
    let mut sum_attempts = 0u64;
    let mut deliveries = Vec::new();

    for i in 0..horizon {
        let gap = arrivals.sample_interarrival(clock_arr)?;
        clock_arr += gap;
        let arrival = clock_arr;

        while in_flight.front().is_some_and(|&d| d <= arrival) {
            in_flight.pop_front();
        }
        if in_flight.len() >= cfg.queue_guard {
            return Err(Error::Divergence {
                len: in_flight.len() + 1,
                guard: cfg.queue_guard,
            });
        }

        let start = arrival.max(prev_delivery);
        let mut t = start;
        let mut attempts = 0u64;
        loop {
            attempts += 1;
            let s = service.sample(&mut service_rng);
            let success = match &mut model {
                AttemptModel::Geometric { success_prob } => {
                    outcome_rng.random::<f64>() < *success_prob
                }
                AttemptModel::Markov {
                    chain,
                    interferers,
                    fail_poor,
                    fail_ideal,
                    collision_window,
                } => {
                    let fail_p = if chain.poor_at(t) {
                        *fail_poor
                    } else {
                        *fail_ideal
                    };
                    let frame_ok = outcome_rng.random::<f64>() >= fail_p;
                    let collided = match interferers {
                        Some(stream) => {
                            stream.any_within(t - *collision_window, t + *collision_window)?
                        }
                        None => false,
                    };
                    frame_ok && !collided
                }
            };
            t += s;
            if success {
                break;
            }
        }
        let delivery = t;
        let system_time = delivery - arrival;
        in_flight.push_back(delivery);

        if i == warmup {
            window_start = prev_delivery;
            window_age0 = prev_system_time;
        }
        if i >= warmup {
            let g = delivery - prev_delivery;
            integral += g * prev_system_time + 0.5 * g * g;
            sum_wait += start - arrival;
            sum_system += system_time;
            sum_attempts += attempts;
            if keep_deliveries {
                deliveries.push((delivery, system_time));
            }
        }
        prev_delivery = delivery;
        prev_system_time = system_time;
    }

    let measured = horizon - warmup;
    let elapsed = prev_delivery - window_start;
    let poor_fraction = match &model {
        AttemptModel::Markov { chain, .. } => Some(chain.poor_fraction()),
        AttemptModel::Geometric { .. } => None,
    };
    Ok(RepOutcome {
        stats: ReplicationStats {
            empirical_aoi: integral / elapsed,
            mean_wait: sum_wait / measured as f64,
            mean_system_time: sum_system / measured as f64,
            mean_attempts: sum_attempts as f64 / measured as f64,
            channel_poor_fraction: poor_fraction,
            delivered: measured,
        },
        integral,
        elapsed,
        window_start,
        window_age0,
        deliveries,
    })
}

/// Runs the configured replications (in parallel, each on its own generator
/// substream) and aggregates. Output is bit-identical for a fixed seed.
pub fn run(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let outcomes: Result<Vec<RepOutcome>> = (0..u64::from(cfg.replications))
        .into_par_iter()
        .map(|rep| run_replication(cfg, rep, false))
        .collect();
    let outcomes = outcomes?;

    let n = outcomes.len() as f64;
    let aois: Vec<f64> = outcomes.iter().map(|o| o.stats.empirical_aoi).collect();
    let mean_aoi = aois.iter().sum::<f64>() / n;
    let aoi_stderr = if outcomes.len() > 1 {
        let var = aois.iter().map(|a| (a - mean_aoi).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let mean_of = |f: fn(&ReplicationStats) -> f64| -> f64 {
        outcomes.iter().map(|o| f(&o.stats)).sum::<f64>() / n
    };
    let poor = if outcomes
        .iter()
        .all(|o| o.stats.channel_poor_fraction.is_some())
    {
        Some(
            outcomes
                .iter()
                .map(|o| o.stats.channel_poor_fraction.unwrap())
                .sum::<f64>()
                / n,
        )
    } else {
        None
    };

    Ok(SimResult {
        empirical_aoi: mean_aoi,
        aoi_stderr,
        mean_wait: mean_of(|s| s.mean_wait),
        mean_system_time: mean_of(|s| s.mean_system_time),
        mean_attempts: mean_of(|s| s.mean_attempts),
        channel_poor_fraction: poor,
        delivered: outcomes.iter().map(|o| o.stats.delivered).sum(),
        per_replication: outcomes.into_iter().map(|o| o.stats).collect(),
    })
}

/// Age trajectory of replication 0, decimated to at most `max_points`
/// vertices. The exact integral is preserved alongside so the decimation
/// error is known, not estimated.
pub fn age_trace(cfg: &SimConfig, max_points: usize) -> Result<AgeTrace> {
    cfg.validate()?;
    if max_points < 3 {
        return Err(Error::Argument(format!(
            "max_points must be >= 3, got {max_points}"
        )));
    }
    let outcome = run_replication(cfg, 0, true)?;
    let deliveries = &outcome.deliveries;
    let full_len = 1 + 2 * deliveries.len();

    let mut points = Vec::new();
    points.push((outcome.window_start, outcome.window_age0));
    if full_len <= max_points {
        let mut prev = (outcome.window_start, outcome.window_age0);
        for &(d, t_sys) in deliveries {
            points.push((d, prev.1 + (d - prev.0)));
            points.push((d, t_sys));
            prev = (d, t_sys);
        }
    } else {
        let teeth = (max_points - 1) / 2;
        let stride = deliveries.len().div_ceil(teeth);
        let mut idx = stride - 1;
        while idx < deliveries.len() {
            let (d, t_sys) = deliveries[idx];
            let (pd, pt) = if idx == 0 {
                (outcome.window_start, outcome.window_age0)
            } else {
                deliveries[idx - 1]
            };
            points.push((d, pt + (d - pd)));
            points.push((d, t_sys));
            if idx == deliveries.len() - 1 {
                break;
            }
            idx = (idx + stride).min(deliveries.len() - 1);
        }
    }

    let mut poly_integral = 0.0;
    for pair in points.windows(2) {
        let (t0, y0) = pair[0];
        let (t1, y1) = pair[1];
        poly_integral += (t1 - t0) * 0.5 * (y0 + y1);
    }

    Ok(AgeTrace {
        points,
        empirical_aoi: outcome.integral / outcome.elapsed,
        elapsed: outcome.elapsed,
        decimation_error: (poly_integral - outcome.integral).abs(),
    })
}
