//! `aoi` — average age-of-information analysis for V2I update streams:
//! closed-form evaluation, figure sweeps, rate optimization, discrete-event
//! simulation, channel derivation, and controller replay.

// `!(a < b)`-style checks are deliberate: they reject NaN along with the
// out-of-order values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "aoi",
    version,
    about = "Average age-of-information toolkit for V2I update streams"
)]
pub struct Cli {
    /// TOML config file with [traffic], [channel], and [sim] sections
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

/// Traffic-model overrides; any value not given falls back to the config
/// file, then to the built-in defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct TrafficFlags {
    /// Queueing discipline: mm1 or dm1
    #[arg(long)]
    pub model: Option<String>,
    /// Service rate, packets per second
    #[arg(long)]
    pub mu: Option<f64>,
    /// Utilization (arrival rate over service rate), in (0,1)
    #[arg(long)]
    pub rho: Option<f64>,
    /// Vehicles per base station
    #[arg(long)]
    pub fleet: Option<u32>,
    /// Number of base stations
    #[arg(long)]
    pub stations: Option<u32>,
    /// Slot interval, seconds
    #[arg(long)]
    pub slot: Option<f64>,
    /// Collision window, seconds (default: 3 slot intervals)
    #[arg(long = "tau-c")]
    pub tau_c: Option<f64>,
    /// Channel drop probability
    #[arg(long)]
    pub pd: Option<f64>,
    /// D/M/1 collision exponent rate: deterministic-gap or arrival-rate
    #[arg(long = "exponent-mode")]
    pub exponent_mode: Option<String>,
}

/// Physical channel inputs for `channel`.
#[derive(Args, Debug, Default, Clone)]
pub struct ChannelFlags {
    /// Vehicle speed, m/s
    #[arg(long)]
    pub speed: Option<f64>,
    /// Carrier frequency, Hz
    #[arg(long)]
    pub fc: Option<f64>,
    /// Link bit rate, bits/s
    #[arg(long = "bit-rate")]
    pub bit_rate: Option<f64>,
    /// Frame size, bits
    #[arg(long = "frame-size")]
    pub frame_size: Option<f64>,
    /// Fading margin (mean SNR over decoding threshold)
    #[arg(long = "fading-margin")]
    pub fading_margin: Option<f64>,
    /// Frame failure probability in the poor state
    #[arg(long)]
    pub vl: Option<f64>,
    /// Frame failure probability in the ideal state
    #[arg(long)]
    pub ll: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepVariable {
    Rho,
    FleetSize,
    DropProb,
    CollisionWindow,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Rho => "rho",
            SweepVariable::FleetSize => "fleet_size",
            SweepVariable::DropProb => "drop_prob",
            SweepVariable::CollisionWindow => "collision_window",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// Swept variable
    #[arg(long, value_enum)]
    pub variable: SweepVariable,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long)]
    pub steps: usize,
    /// Comma-separated subset of mm1,dm1
    #[arg(long, default_value = "mm1,dm1")]
    pub disciplines: String,
    /// Optional second variable for a two-variable grid
    #[arg(long = "second-variable", value_enum)]
    pub second_variable: Option<SweepVariable>,
    #[arg(long)]
    pub from2: Option<f64>,
    #[arg(long)]
    pub to2: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub steps2: usize,
    /// Output file (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format: csv or json
    #[arg(long, default_value = "csv")]
    pub format: String,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate the average age for one configuration (JSON)
    Eval {
        #[command(flatten)]
        traffic: TrafficFlags,
    },
    /// Find the age-minimizing utilization (JSON)
    Optimize {
        #[command(flatten)]
        traffic: TrafficFlags,
        /// Tolerance on the located utilization
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Tabulate the average age across a parameter sweep (CSV or JSON)
    Sweep {
        #[command(flatten)]
        traffic: TrafficFlags,
        #[command(flatten)]
        args: SweepArgs,
    },
    /// Run the discrete-event simulator (JSON; optional age-trace CSV)
    Simulate {
        #[command(flatten)]
        traffic: TrafficFlags,
        /// geometric-retry or markov-channel
        #[arg(long)]
        fidelity: Option<String>,
        /// Number of tagged arrivals per replication
        #[arg(long)]
        horizon: Option<u64>,
        /// Leading deliveries discarded before measuring
        #[arg(long)]
        warmup: Option<u64>,
        /// Number of replications
        #[arg(long)]
        reps: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        /// Divergence guard on the queue length
        #[arg(long = "queue-guard")]
        queue_guard: Option<usize>,
        #[command(flatten)]
        direct: config::DirectChannelFlags,
        /// Write the replication-0 age trace as CSV (time,age)
        #[arg(long = "trace-out")]
        trace_out: Option<PathBuf>,
        /// Vertex budget for the age trace
        #[arg(long = "trace-points", default_value_t = 10_000)]
        trace_points: usize,
    },
    /// Derive the two-state channel parameters from physical inputs (JSON)
    Channel {
        #[command(flatten)]
        flags: ChannelFlags,
    },
    /// Replay an environment event stream through the rate controller (CSV)
    Controller {
        #[command(flatten)]
        traffic: TrafficFlags,
        /// Newline-delimited JSON events: {"seq", "kind", "value"}
        #[arg(long)]
        events: PathBuf,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optimization tolerance
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Compare the random-utilization strategy with the optimum (JSON)
    CompareRandom {
        #[command(flatten)]
        traffic: TrafficFlags,
        /// Number of random utilization draws
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Utilization range lo:hi
        #[arg(long, default_value = "0.2:0.8")]
        range: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = commands::dispatch(cli) {
        eprintln!("error: {}: {e}", e.class());
        std::process::exit(e.exit_code());
    }
}
