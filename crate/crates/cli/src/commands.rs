//! Command implementations.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use aoi_core::analytics::{average_aoi, Discipline, TrafficConfig};
use aoi_core::channel::{derive_channel, ChannelConfig};
use aoi_core::format_sig10;
use aoi_core::optimizer::{
    optimal_utilization, random_strategy_aoi, ControllerParams, ControllerState, EnvironmentEvent,
};
use aoi_core::sim::{age_trace, run as run_sim};

use crate::config::{load, DirectChannelFlags, FileConfig};
use crate::error::{CliError, CliResult};
use crate::{ChannelFlags, Cli, Command, SweepArgs, SweepVariable, TrafficFlags};

pub fn dispatch(cli: Cli) -> CliResult<()> {
    let file = load(cli.config.as_deref())?;
    match cli.command {
        Command::Eval { traffic } => cmd_eval(&file, &traffic),
        Command::Optimize { traffic, tol } => cmd_optimize(&file, &traffic, tol),
        Command::Sweep { traffic, args } => cmd_sweep(&file, &traffic, &args),
        Command::Simulate {
            traffic,
            fidelity,
            horizon,
            warmup,
            reps,
            seed,
            queue_guard,
            direct,
            trace_out,
            trace_points,
        } => cmd_simulate(
            &file,
            &traffic,
            fidelity.as_deref(),
            horizon,
            warmup,
            reps,
            seed,
            queue_guard,
            &direct,
            trace_out.as_deref(),
            trace_points,
        ),
        Command::Channel { flags } => cmd_channel(&file, &flags),
        Command::Controller {
            traffic,
            events,
            out,
            tol,
        } => cmd_controller(&file, &traffic, &events, out.as_deref(), tol),
        Command::CompareRandom {
            traffic,
            samples,
            range,
            seed,
        } => cmd_compare_random(&file, &traffic, samples, &range, seed),
    }
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string(value)
        .map_err(|e| CliError::Numeric(format!("serializing output: {e}")))?;
    println!("{text}");
    Ok(())
}

fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::io(&format!("writing {}", p.display()), e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| CliError::io("writing stdout", e))
        }
    }
}

fn cmd_eval(file: &FileConfig, flags: &TrafficFlags) -> CliResult<()> {
    let traffic = file.traffic(flags)?;
    let report = average_aoi(&traffic)?;
    print_json(&report)
}

fn cmd_optimize(file: &FileConfig, flags: &TrafficFlags, tol: f64) -> CliResult<()> {
    let traffic = file.traffic(flags)?;
    let best = optimal_utilization(traffic.discipline, &traffic, tol)?;
    print_json(&json!({
        "discipline": traffic.discipline.as_str(),
        "rho_star": best.utilization,
        "lambda_star": best.utilization * traffic.service_rate,
        "aoi_star": best.average_aoi,
    }))
}

fn apply_variable(cfg: &mut TrafficConfig, var: SweepVariable, value: f64) -> CliResult<f64> {
    match var {
        SweepVariable::Rho => {
            cfg.utilization = value;
            Ok(value)
        }
        SweepVariable::FleetSize => {
            let m = value.round();
            if m < 1.0 {
                return Err(CliError::Validation(format!(
                    "sweep.fleet_size: value {value} rounds below 1"
                )));
            }
            cfg.fleet_size = m as u32;
            Ok(m)
        }
        SweepVariable::DropProb => {
            cfg.drop_prob = value;
            Ok(value)
        }
        SweepVariable::CollisionWindow => {
            cfg.collision_window = value;
            Ok(value)
        }
    }
}

fn linspace(from: f64, to: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
        .collect()
}

fn cmd_sweep(file: &FileConfig, flags: &TrafficFlags, args: &SweepArgs) -> CliResult<()> {
    if !(args.from < args.to) {
        return Err(CliError::Validation(format!(
            "sweep.from/to: need from < to, got {} and {}",
            args.from, args.to
        )));
    }
    if args.steps < 2 {
        return Err(CliError::Validation(format!(
            "sweep.steps: need at least 2, got {}",
            args.steps
        )));
    }
    let second = match (args.second_variable, args.from2, args.to2) {
        (None, _, _) => None,
        (Some(var), Some(f2), Some(t2)) => {
            if var == args.variable {
                return Err(CliError::Validation(
                    "sweep.second_variable: must differ from the first variable".into(),
                ));
            }
            if !(f2 < t2) || args.steps2 < 2 {
                return Err(CliError::Validation(
                    "sweep.from2/to2/steps2: need from2 < to2 and steps2 >= 2".into(),
                ));
            }
            Some((var, linspace(f2, t2, args.steps2)))
        }
        _ => {
            return Err(CliError::Validation(
                "sweep.second_variable: --from2 and --to2 are required with it".into(),
            ));
        }
    };

    let disciplines: Vec<Discipline> = args
        .disciplines
        .split(',')
        .map(|s| s.trim().parse::<Discipline>().map_err(CliError::from))
        .collect::<CliResult<_>>()?;
    if disciplines.is_empty() {
        return Err(CliError::Validation("sweep.disciplines: empty".into()));
    }

    let base = file.traffic(flags)?;
    let mut rows: Vec<(f64, Option<f64>, Discipline, f64, f64, f64)> = Vec::new();
    for &v in &linspace(args.from, args.to, args.steps) {
        let seconds: Vec<Option<f64>> = match &second {
            None => vec![None],
            Some((_, grid)) => grid.iter().copied().map(Some).collect(),
        };
        for v2 in seconds {
            for &d in &disciplines {
                let mut cfg = TrafficConfig {
                    discipline: d,
                    ..base.clone()
                };
                let applied = apply_variable(&mut cfg, args.variable, v)?;
                let applied2 = match (v2, &second) {
                    (Some(x), Some((var2, _))) => Some(apply_variable(&mut cfg, *var2, x)?),
                    _ => None,
                };
                let report = average_aoi(&cfg)?;
                rows.push((
                    applied,
                    applied2,
                    d,
                    report.average_aoi,
                    report.collision_prob,
                    report.penalty_factor,
                ));
            }
        }
    }

    let var_name = args.variable.name();
    let text = if args.format == "json" {
        let objs: Vec<serde_json::Value> = rows
            .iter()
            .map(|(v, v2, d, aoi, pc, pen)| {
                let mut o = json!({
                    "variable": var_name,
                    "value": v,
                    "discipline": d.as_str(),
                    "average_aoi": aoi,
                    "collision_prob": pc,
                    "penalty_factor": pen,
                });
                if let Some(x) = v2 {
                    o["value2"] = json!(x);
                }
                o
            })
            .collect();
        let mut s = serde_json::to_string(&objs)
            .map_err(|e| CliError::Numeric(format!("serializing sweep: {e}")))?;
        s.push('\n');
        s
    } else {
        let mut s = String::new();
        if second.is_some() {
            s.push_str(
                "variable,value,value2,discipline,average_aoi,collision_prob,penalty_factor\n",
            );
        } else {
            s.push_str("variable,value,discipline,average_aoi,collision_prob,penalty_factor\n");
        }
        for (v, v2, d, aoi, pc, pen) in &rows {
            match v2 {
                Some(x) => s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    var_name,
                    format_sig10(*v),
                    format_sig10(*x),
                    d.as_str(),
                    format_sig10(*aoi),
                    format_sig10(*pc),
                    format_sig10(*pen)
                )),
                None => s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    var_name,
                    format_sig10(*v),
                    d.as_str(),
                    format_sig10(*aoi),
                    format_sig10(*pc),
                    format_sig10(*pen)
                )),
            }
        }
        s
    };
    write_text(args.out.as_deref(), &text)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    file: &FileConfig,
    flags: &TrafficFlags,
    fidelity: Option<&str>,
    horizon: Option<u64>,
    warmup: Option<u64>,
    reps: Option<u32>,
    seed: Option<u64>,
    queue_guard: Option<usize>,
    direct: &DirectChannelFlags,
    trace_out: Option<&Path>,
    trace_points: usize,
) -> CliResult<()> {
    let traffic = file.traffic(flags)?;
    let cfg = file.sim(
        traffic,
        fidelity,
        horizon,
        warmup,
        reps,
        seed,
        queue_guard,
        direct,
    )?;
    let result = run_sim(&cfg)?;
    print_json(&result)?;
    if let Some(path) = trace_out {
        let trace = age_trace(&cfg, trace_points)?;
        let mut csv = String::from("time,age\n");
        for (t, a) in &trace.points {
            csv.push_str(&format!("{},{}\n", format_sig10(*t), format_sig10(*a)));
        }
        write_text(Some(path), &csv)?;
        eprintln!(
            "age trace: {} points, decimation error {:.3e} s·s over {:.3e} s",
            trace.points.len(),
            trace.decimation_error,
            trace.elapsed
        );
    }
    Ok(())
}

fn cmd_channel(file: &FileConfig, flags: &ChannelFlags) -> CliResult<()> {
    let from_file = file.channel_config();
    let pick =
        |flag: Option<f64>, from_cfg: fn(&ChannelConfig) -> f64, key: &str| -> CliResult<f64> {
            flag.or_else(|| from_file.as_ref().map(from_cfg))
                .ok_or_else(|| {
                    CliError::Validation(format!("channel.{key}: required (flag or config file)"))
                })
        };
    let cfg = ChannelConfig {
        vehicle_speed: pick(flags.speed, |c| c.vehicle_speed, "vehicle_speed")?,
        carrier_frequency: pick(flags.fc, |c| c.carrier_frequency, "carrier_frequency")?,
        bit_rate: pick(flags.bit_rate, |c| c.bit_rate, "bit_rate")?,
        frame_size: pick(flags.frame_size, |c| c.frame_size, "frame_size")?,
        fading_margin: pick(flags.fading_margin, |c| c.fading_margin, "fading_margin")?,
        fail_prob_poor: flags.vl.or(file.channel.fail_prob_poor).unwrap_or(1.0),
        fail_prob_ideal: flags.ll.or(file.channel.fail_prob_ideal).unwrap_or(0.0),
    };
    let derived = derive_channel(&cfg)?;
    eprintln!(
        "model note: stay_poor = 1 - [Q1(eta, corr*eta) - Q1(corr*eta, eta)]/(e^(1/F) - 1); \
         stay_ideal is set so the chain's stationary poor-state mass equals the average error \
         probability 1 - e^(-1/F)."
    );
    print_json(&derived)
}

fn cmd_controller(
    file: &FileConfig,
    flags: &TrafficFlags,
    events_path: &Path,
    out: Option<&Path>,
    tol: f64,
) -> CliResult<()> {
    let traffic = file.traffic(flags)?;
    let text = std::fs::read_to_string(events_path)
        .map_err(|e| CliError::io(&format!("reading {}", events_path.display()), e))?;
    let mut events = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event = EnvironmentEvent::parse_line(line).map_err(|e| {
            CliError::Validation(format!("{}:{}: {e}", events_path.display(), lineno + 1))
        })?;
        events.push(event);
    }
    if let Some(w) = events.windows(2).find(|w| w[1].seq < w[0].seq) {
        return Err(CliError::Validation(format!(
            "{}: event sequence must be non-decreasing (saw {} after {})",
            events_path.display(),
            w[1].seq,
            w[0].seq
        )));
    }

    let params = ControllerParams {
        service_rate: traffic.service_rate,
        slot_interval: traffic.slot_interval,
        collision_window: traffic.collision_window,
        discipline: traffic.discipline,
        collision_exponent_mode: traffic.collision_exponent_mode,
        tol,
    };
    let mut state = ControllerState::new(
        traffic.station_count,
        traffic.fleet_size,
        traffic.drop_prob,
        &params,
    )?;
    for event in &events {
        state.step(event, &params)?;
    }
    write_text(out, &state.decision_csv())
}

fn parse_range(s: &str) -> CliResult<(f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(CliError::Validation(format!(
            "range: expected lo:hi, got {s}"
        )));
    }
    let lo = parts[0]
        .parse::<f64>()
        .map_err(|e| CliError::Validation(format!("range lo: {e}")))?;
    let hi = parts[1]
        .parse::<f64>()
        .map_err(|e| CliError::Validation(format!("range hi: {e}")))?;
    Ok((lo, hi))
}

fn cmd_compare_random(
    file: &FileConfig,
    flags: &TrafficFlags,
    samples: usize,
    range: &str,
    seed: u64,
) -> CliResult<()> {
    let traffic = file.traffic(flags)?;
    let (lo, hi) = parse_range(range)?;
    let mean = random_strategy_aoi(traffic.discipline, &traffic, samples, (lo, hi), seed)?;
    let best = optimal_utilization(traffic.discipline, &traffic, 1e-9)?;
    print_json(&json!({
        "discipline": traffic.discipline.as_str(),
        "samples": samples,
        "range": [lo, hi],
        "seed": seed,
        "mean_random_aoi": mean,
        "rho_star": best.utilization,
        "optimal_aoi": best.average_aoi,
        "ratio": mean / best.average_aoi,
    }))
}
