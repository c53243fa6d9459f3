//! End-to-end tests of the command-line surface: output formats, exit
//! codes, config-file precedence, and determinism of the file outputs.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn aoi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aoi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stdout_str(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn eval_reports_reference_points() {
    let v = stdout_json(&aoi(&[
        "eval", "--model", "mm1", "--mu", "1", "--rho", "0.53",
    ]));
    assert!((v["average_aoi"].as_f64().unwrap() - 3.4845).abs() < 1e-3);

    let v = stdout_json(&aoi(&[
        "eval", "--model", "dm1", "--mu", "1", "--rho", "0.515",
    ]));
    assert!((v["average_aoi"].as_f64().unwrap() - 2.2527).abs() < 1e-3);
    assert!(v["beta"].as_f64().unwrap() > 0.0);
}

#[test]
fn eval_rejects_unstable_utilization_with_exit_3() {
    let out = aoi(&["eval", "--model", "mm1", "--rho", "1.2"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("validation"), "stderr: {err}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = aoi(&["eval", "--definitely-not-a-flag", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_output_reingested_as_overrides_reproduces_itself() {
    let args = [
        "eval", "--model", "mm1", "--rho", "0.6", "--pd", "0.25", "--fleet", "3",
    ];
    let first = stdout_str(&aoi(&args));
    let v: Value = serde_json::from_str(&first).unwrap();
    let pd = v["drop_prob"].as_f64().unwrap().to_string();
    let second = stdout_str(&aoi(&[
        "eval", "--model", "mm1", "--rho", "0.6", "--pd", &pd, "--fleet", "3",
    ]));
    assert_eq!(first, second);
}

#[test]
fn optimize_matches_reported_optima() {
    let v = stdout_json(&aoi(&["optimize", "--model", "mm1"]));
    assert!((v["rho_star"].as_f64().unwrap() - 0.531).abs() < 0.01);
    assert!((v["aoi_star"].as_f64().unwrap() - 3.48).abs() < 0.01);
    assert!((v["lambda_star"].as_f64().unwrap() - v["rho_star"].as_f64().unwrap()).abs() < 1e-12);

    let v = stdout_json(&aoi(&["optimize", "--model", "dm1"]));
    assert!((v["rho_star"].as_f64().unwrap() - 0.515).abs() < 0.01);
    assert!((v["aoi_star"].as_f64().unwrap() - 2.26).abs() < 0.02);
}

#[test]
fn channel_reports_doppler_and_model_note() {
    let out = aoi(&[
        "channel",
        "--speed",
        "30",
        "--fc",
        "5.9e9",
        "--bit-rate",
        "1e6",
        "--frame-size",
        "100",
        "--fading-margin",
        "10",
    ]);
    let v = stdout_json(&out);
    assert!((v["doppler_shift"].as_f64().unwrap() - 590.0).abs() < 1e-9);
    assert!((0.0..=1.0).contains(&v["stay_poor"].as_f64().unwrap()));
    let note = String::from_utf8_lossy(&out.stderr);
    assert!(note.contains("model note"), "stderr: {note}");
}

#[test]
fn channel_missing_input_names_the_key() {
    let out = aoi(&["channel", "--speed", "30"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("carrier_frequency"), "stderr: {err}");
}

#[test]
fn channel_outside_model_regime_is_a_numeric_error() {
    // frame rate low enough to drive the fading correlation negative
    let out = aoi(&[
        "channel",
        "--speed",
        "30",
        "--fc",
        "5.9e9",
        "--bit-rate",
        "1e6",
        "--frame-size",
        "1000",
        "--fading-margin",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("numeric"), "stderr: {err}");
}

fn parse_csv(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn rho_sweep_minima_sit_at_the_reported_optima() {
    let out = aoi(&[
        "sweep",
        "--variable",
        "rho",
        "--from",
        "0.2",
        "--to",
        "0.8",
        "--steps",
        "61",
    ]);
    let csv = stdout_str(&out);
    assert!(
        csv.starts_with("variable,value,discipline,average_aoi,collision_prob,penalty_factor\n")
    );
    let rows = parse_csv(&csv);
    assert_eq!(rows.len(), 61 * 2);
    for (d, target, tol) in [("mm1", 0.531, 0.011), ("dm1", 0.515, 0.011)] {
        let best = rows
            .iter()
            .filter(|r| r[2] == d)
            .min_by(|a, b| {
                a[3].parse::<f64>()
                    .unwrap()
                    .partial_cmp(&b[3].parse::<f64>().unwrap())
                    .unwrap()
            })
            .unwrap();
        let rho = best[1].parse::<f64>().unwrap();
        assert!((rho - target).abs() <= tol, "{d} sweep minimum at {rho}");
    }
}

#[test]
fn sweep_output_is_byte_deterministic() {
    let args = [
        "sweep",
        "--variable",
        "drop-prob",
        "--from",
        "0.0",
        "--to",
        "0.6",
        "--steps",
        "7",
    ];
    assert_eq!(stdout_str(&aoi(&args)), stdout_str(&aoi(&args)));
}

#[test]
fn fleet_sweep_is_monotone() {
    let out = aoi(&[
        "sweep",
        "--variable",
        "fleet-size",
        "--from",
        "2",
        "--to",
        "10",
        "--steps",
        "9",
        "--rho",
        "0.7",
        "--pd",
        "0.1",
    ]);
    let rows = parse_csv(&stdout_str(&out));
    for d in ["mm1", "dm1"] {
        let aois: Vec<f64> = rows
            .iter()
            .filter(|r| r[2] == d)
            .map(|r| r[3].parse().unwrap())
            .collect();
        assert_eq!(aois.len(), 9);
        assert!(aois.windows(2).all(|w| w[1] >= w[0]), "{d}: {aois:?}");
    }
}

#[test]
fn collision_window_sweep_is_monotone() {
    // wider spacing requirement -> higher collision probability -> higher age
    let out = aoi(&[
        "sweep",
        "--variable",
        "collision-window",
        "--from",
        "0.0",
        "--to",
        "0.02",
        "--steps",
        "5",
        "--fleet",
        "4",
        "--rho",
        "0.6",
    ]);
    let rows = parse_csv(&stdout_str(&out));
    for d in ["mm1", "dm1"] {
        let aois: Vec<f64> = rows
            .iter()
            .filter(|r| r[2] == d)
            .map(|r| r[3].parse().unwrap())
            .collect();
        assert!(aois.windows(2).all(|w| w[1] > w[0]), "{d}: {aois:?}");
        let pcs: Vec<f64> = rows
            .iter()
            .filter(|r| r[2] == d)
            .map(|r| r[4].parse().unwrap())
            .collect();
        assert!(
            pcs.windows(2).all(|w| w[1] > w[0]),
            "{d} collision prob: {pcs:?}"
        );
    }
}

#[test]
fn sweep_rows_match_standalone_eval() {
    let out = aoi(&[
        "sweep",
        "--variable",
        "rho",
        "--from",
        "0.25",
        "--to",
        "0.75",
        "--steps",
        "11",
        "--pd",
        "0.2",
        "--fleet",
        "4",
    ]);
    let rows = parse_csv(&stdout_str(&out));
    // spot-check a spread of rows against eval at the same point
    for row in rows.iter().step_by(3) {
        let rho = &row[1];
        let model = &row[2];
        let v = stdout_json(&aoi(&[
            "eval", "--model", model, "--rho", rho, "--pd", "0.2", "--fleet", "4",
        ]));
        let formatted = format!("{:.9e}", v["average_aoi"].as_f64().unwrap());
        assert_eq!(&row[3], &formatted, "row {row:?}");
    }
}

#[test]
fn two_variable_sweep_adds_value2_column() {
    let out = aoi(&[
        "sweep",
        "--variable",
        "fleet-size",
        "--from",
        "2",
        "--to",
        "6",
        "--steps",
        "5",
        "--second-variable",
        "drop-prob",
        "--from2",
        "0.0",
        "--to2",
        "0.4",
        "--steps2",
        "3",
        "--disciplines",
        "mm1",
    ]);
    let csv = stdout_str(&out);
    assert!(csv.starts_with(
        "variable,value,value2,discipline,average_aoi,collision_prob,penalty_factor\n"
    ));
    let rows = parse_csv(&csv);
    assert_eq!(rows.len(), 5 * 3);
}

#[test]
fn sweep_json_format() {
    let out = aoi(&[
        "sweep",
        "--variable",
        "rho",
        "--from",
        "0.3",
        "--to",
        "0.7",
        "--steps",
        "3",
        "--disciplines",
        "dm1",
        "--format",
        "json",
    ]);
    let v = stdout_json(&out);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["variable"], "rho");
    assert_eq!(rows[0]["discipline"], "dm1");
}

#[test]
fn simulate_is_deterministic_and_close_to_theory() {
    let args = [
        "simulate",
        "--model",
        "mm1",
        "--rho",
        "0.5",
        "--tau-c",
        "0",
        "--horizon",
        "20000",
        "--warmup",
        "2000",
        "--reps",
        "4",
        "--seed",
        "9",
    ];
    let first = stdout_str(&aoi(&args));
    let second = stdout_str(&aoi(&args));
    assert_eq!(first, second);
    let v: Value = serde_json::from_str(&first).unwrap();
    let aoi_val = v["empirical_aoi"].as_f64().unwrap();
    assert!((aoi_val - 3.5).abs() < 0.15, "empirical {aoi_val}");
    assert_eq!(v["per_replication"].as_array().unwrap().len(), 4);
}

#[test]
fn simulate_writes_age_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = aoi(&[
        "simulate",
        "--model",
        "dm1",
        "--rho",
        "0.5",
        "--tau-c",
        "0",
        "--horizon",
        "2000",
        "--warmup",
        "200",
        "--reps",
        "1",
        "--seed",
        "3",
        "--trace-out",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "time,age");
    let n = csv.lines().count();
    assert!(n > 100, "trace has {n} lines");
}

fn write_events(dir: &Path) -> std::path::PathBuf {
    // derive a channel to embed in the channel-change event
    let ch = stdout_json(&aoi(&[
        "channel",
        "--speed",
        "20",
        "--fc",
        "5.9e9",
        "--bit-rate",
        "1e6",
        "--frame-size",
        "100",
        "--fading-margin",
        "8",
    ]));
    let path = dir.join("events.jsonl");
    let lines = [
        r#"{"seq":1,"kind":"fleet-change","value":4}"#.to_string(),
        r#"{"seq":2,"kind":"station-change","value":3}"#.to_string(),
        format!(r#"{{"seq":3,"kind":"channel-change","value":{ch}}}"#),
        r#"{"seq":4,"kind":"fleet-change","value":4}"#.to_string(),
    ];
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

#[test]
fn controller_replay_is_deterministic_and_skips_noops() {
    let dir = tempfile::tempdir().unwrap();
    let events = write_events(dir.path());
    let args = [
        "controller",
        "--events",
        events.to_str().unwrap(),
        "--tau-c",
        "0.01",
        "--fleet",
        "2",
    ];
    let first = stdout_str(&aoi(&args));
    let second = stdout_str(&aoi(&args));
    assert_eq!(first, second);

    let mut lines = first.lines();
    assert_eq!(
        lines.next().unwrap(),
        "seq,kind,rho_star,lambda_star,aoi_star"
    );
    let rows: Vec<&str> = lines.collect();
    // init + fleet-change + station-change + channel-change; the final
    // fleet-change repeats the current fleet and must not log
    assert_eq!(rows.len(), 4, "rows: {rows:?}");
    assert!(rows[0].starts_with("0,init,"));
    assert!(rows[1].starts_with("1,fleet-change,"));
    assert!(rows[2].starts_with("2,station-change,"));
    assert!(rows[3].starts_with("3,channel-change,"));
}

#[test]
fn controller_rejects_out_of_order_events() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    std::fs::write(
        &path,
        concat!(
            r#"{"seq":5,"kind":"fleet-change","value":4}"#,
            "\n",
            r#"{"seq":2,"kind":"fleet-change","value":6}"#,
            "\n"
        ),
    )
    .unwrap();
    let out = aoi(&["controller", "--events", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn controller_missing_events_file_is_io_error() {
    let out = aoi(&["controller", "--events", "/nonexistent/events.jsonl"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn compare_random_beats_nothing() {
    let out = aoi(&[
        "compare-random",
        "--model",
        "mm1",
        "--samples",
        "100",
        "--range",
        "0.2:0.8",
        "--seed",
        "7",
    ]);
    let v = stdout_json(&out);
    assert!(v["ratio"].as_f64().unwrap() > 1.0);
    let again = stdout_json(&aoi(&[
        "compare-random",
        "--model",
        "mm1",
        "--samples",
        "100",
        "--range",
        "0.2:0.8",
        "--seed",
        "7",
    ]));
    assert_eq!(v, again);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("aoi.toml");
    std::fs::write(
        &cfg,
        r#"
[traffic]
service_rate = 2.0
utilization = 0.4
discipline = "dm1"

[channel]
vehicle_speed = 30.0
carrier_frequency = 5.9e9
bit_rate = 1.0e6
frame_size = 100.0
fading_margin = 10.0

[sim]
horizon = 1000
warmup = 100
replications = 2
seed = 5
"#,
    )
    .unwrap();
    let v = stdout_json(&aoi(&["eval", "--config", cfg.to_str().unwrap()]));
    // dm1 at mu = 2, rho = 0.4: beta present, age halves relative to mu = 1
    assert!(v["beta"].as_f64().is_some());
    let from_file = v["average_aoi"].as_f64().unwrap();

    let v2 = stdout_json(&aoi(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--mu",
        "1.0",
    ]));
    let overridden = v2["average_aoi"].as_f64().unwrap();
    assert!((overridden - 2.0 * from_file).abs() < 1e-9);

    // channel command picks its inputs from the file
    let ch = stdout_json(&aoi(&["channel", "--config", cfg.to_str().unwrap()]));
    assert!((ch["doppler_shift"].as_f64().unwrap() - 590.0).abs() < 1e-9);

    // simulate picks horizon etc. from the file
    let sim = stdout_json(&aoi(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--tau-c",
        "0",
    ]));
    assert_eq!(sim["per_replication"].as_array().unwrap().len(), 2);
    assert_eq!(sim["delivered"].as_u64().unwrap(), 2 * 900);
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[traffic]\nservice_rat = 1.0\n").unwrap();
    let out = aoi(&["eval", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("service_rat"), "stderr: {err}");
}

#[test]
fn missing_config_file_is_io_error() {
    let out = aoi(&["eval", "--config", "/nonexistent/aoi.toml"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn markov_simulation_through_config_channel_section() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("aoi.toml");
    std::fs::write(
        &cfg,
        r#"
[traffic]
utilization = 0.5

[channel]
vehicle_speed = 30.0
carrier_frequency = 5.9e9
bit_rate = 1.0e6
frame_size = 100.0
fading_margin = 10.0
"#,
    )
    .unwrap();
    let v = stdout_json(&aoi(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--fidelity",
        "markov-channel",
        "--horizon",
        "4000",
        "--warmup",
        "400",
        "--reps",
        "2",
        "--seed",
        "11",
    ]));
    let frac = v["channel_poor_fraction"].as_f64().unwrap();
    assert!(frac > 0.0 && frac < 1.0, "poor fraction {frac}");
    assert!(v["mean_attempts"].as_f64().unwrap() > 1.0);
}
