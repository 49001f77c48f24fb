mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use common::{scenario, sha256_file};
use meco_core::bus::{Broker, BusClient, LocalClient};
use meco_core::runner::{read_log, replay, run_scenario, LogRecord, LogWriter, RunOptions, ThrustersMessage};
use serde_json::Value;

fn run(path: &Path, dir: &Path, name: &str, seed: Option<u64>) -> PathBuf {
    let log = dir.join(name);
    let opts = RunOptions { log: Some(log.clone()), fast: true, seed, ..RunOptions::default() };
    run_scenario(path, &opts).unwrap();
    log
}

/// Copies an asset scenario into `dir` after editing its JSON, dropping the
/// relative vehicle and menu references so the built-ins apply.
fn edited(name: &str, dir: &Path, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(scenario(name)).unwrap()).unwrap();
    doc.as_object_mut().unwrap().remove("vehicle");
    doc.as_object_mut().unwrap().remove("menu");
    edit(&mut doc);
    let path = dir.join(name);
    std::fs::write(&path, doc.to_string()).unwrap();
    path
}

fn payload(r: &LogRecord) -> Value {
    serde_json::from_str(r.payload.get()).unwrap()
}

#[test]
fn logs_number_each_topic_without_gaps() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["mission_end_to_end.json", "reconfiguration.json", "mav_standoff.json"] {
        let log = read_log(run(&scenario(name), dir.path(), name, None)).unwrap();
        assert_eq!(log.warnings, 0);
        let mut next: BTreeMap<&str, u64> = BTreeMap::new();
        let mut last_ts = 0;
        for r in &log.records {
            let seq = next.entry(&r.topic).or_default();
            assert_eq!(r.seq, *seq, "{name}: gap on {}", r.topic);
            *seq += 1;
            assert!(r.timestamp_ns >= last_ts, "{name}: time went backwards on {}", r.topic);
            last_ts = r.timestamp_ns;
        }
        for topic in ["/sim/state", "/sensors/ahrs", "/sensors/depth", "/actuators/thrusters", "/uhri/hreye", "/mission/state"] {
            assert!(next.contains_key(topic), "{name}: nothing on {topic}");
        }
    }
}

#[test]
fn same_seed_same_bytes_other_seed_other_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("depth_step.json");
    let a = sha256_file(&run(&s, dir.path(), "a.jsonl", None));
    let b = sha256_file(&run(&s, dir.path(), "b.jsonl", None));
    let c = sha256_file(&run(&s, dir.path(), "c.jsonl", Some(8)));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn replay_through_the_bus_reproduces_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let original = run(&scenario("mission_end_to_end.json"), dir.path(), "orig.jsonl", None);

    let broker = Broker::new();
    let mut publisher = LocalClient::connect(&broker, "replay");
    let mut recorder = LocalClient::connect(&broker, "recorder");
    recorder.subscribe("*").unwrap();
    let copy = dir.path().join("copy.jsonl");
    let mut out = LogWriter::create(&copy).unwrap();
    let summary = replay(&original, f64::INFINITY, |r| {
        publisher.publish(&r.topic, r.timestamp_ns, r.payload.get().as_bytes()).unwrap();
        while let Some(f) = recorder.try_recv().unwrap() {
            out.write(&f.topic, f.timestamp_ns, std::str::from_utf8(&f.payload).unwrap()).unwrap();
        }
        Ok(())
    })
    .unwrap();
    out.finish().unwrap();
    assert_eq!(summary.warnings, 0);
    assert_eq!(recorder.dropped(), 0);

    let (a, b) = (read_log(&original).unwrap(), read_log(&copy).unwrap());
    assert_eq!(summary.records, a.records.len());
    assert_eq!(a.records, b.records);
    assert_eq!(sha256_file(&original), sha256_file(&copy));
}

#[test]
fn truncated_last_line_is_one_warning() {
    let dir = tempfile::tempdir().unwrap();
    let log = run(&scenario("depth_step.json"), dir.path(), "full.jsonl", Some(1));
    let full = std::fs::read(&log).unwrap();
    let intact = read_log(&log).unwrap().records.len();
    let cut = dir.path().join("cut.jsonl");
    let mut f = std::fs::File::create(&cut).unwrap();
    // Drop the newline and the last twenty bytes of the final record.
    f.write_all(&full[..full.len() - 21]).unwrap();
    drop(f);
    let read = read_log(&cut).unwrap();
    assert_eq!(read.warnings, 1);
    assert_eq!(read.records.len(), intact - 1);
    let replayed = replay(&cut, f64::INFINITY, |_| Ok(())).unwrap();
    assert_eq!((replayed.records, replayed.warnings), (intact - 1, 1));
}

fn depth_errors(log: &Path, after: f64) -> (f64, f64) {
    let log = read_log(log).unwrap();
    let (mut sum, mut n, mut worst) = (0.0, 0.0, 0.0_f64);
    for r in log.records.iter().filter(|r| r.topic == "/sim/state" && r.timestamp_ns as f64 * 1e-9 > after) {
        let e = (payload(r)["depth"].as_f64().unwrap() - 2.0).abs();
        sum += e;
        n += 1.0;
        worst = worst.max(e);
    }
    (sum / n, worst)
}

#[test]
fn losing_the_heave_thruster_degrades_depth_hold() {
    let dir = tempfile::tempdir().unwrap();
    let with = edited("thruster_failure.json", dir.path(), |_| {});
    let healthy_dir = dir.path().join("healthy");
    std::fs::create_dir(&healthy_dir).unwrap();
    let without = edited("thruster_failure.json", &healthy_dir, |d| {
        d["events"].as_array_mut().unwrap().retain(|e| e["type"] != "thruster_failure");
    });
    let failed = run(&with, dir.path(), "failed.jsonl", None);
    let healthy = run(&without, dir.path(), "healthy.jsonl", None);
    let (fail_mean, fail_worst) = depth_errors(&failed, 5.0);
    let (ok_mean, ok_worst) = depth_errors(&healthy, 5.0);
    println!(
        "depth error after t=5 s: mean {fail_mean:.4} m vs {ok_mean:.4} m (ratio {:.1}), worst {fail_worst:.4} vs {ok_worst:.4}",
        fail_mean / ok_mean
    );
    assert!(fail_mean > ok_mean);

    // The failure is physical: the controller keeps commanding the lost thruster.
    let log = read_log(&failed).unwrap();
    let last: ThrustersMessage =
        serde_json::from_str(log.records.iter().rev().find(|r| r.topic == "/actuators/thrusters").unwrap().payload.get())
            .unwrap();
    assert_eq!(last.failed, ["heave"]);
    assert_eq!(last.ids.len(), 5);
}

#[test]
fn disarm_zeroes_every_thruster_command() {
    let dir = tempfile::tempdir().unwrap();
    let log = read_log(run(&scenario("mission_end_to_end.json"), dir.path(), "m.jsonl", None)).unwrap();
    let (mut before, mut after) = (0usize, 0usize);
    for r in log.records.iter().filter(|r| r.topic == "/actuators/thrusters") {
        let m: ThrustersMessage = serde_json::from_str(r.payload.get()).unwrap();
        if r.timestamp_ns >= 45_000_000_000 {
            assert!(!m.armed && m.thrust.iter().all(|&u| u == 0.0), "t={} ns: {:?}", r.timestamp_ns, m.thrust);
            after += 1;
        } else if m.thrust.iter().any(|&u| u != 0.0) {
            before += 1;
        }
    }
    assert!(before > 0, "the vehicle never moved before disarming");
    assert!(after > 0);
}

#[test]
fn invalid_scenarios_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.json", "{"),
        ("dt.json", r#"{"duration": 5, "dt": 1.0}"#),
        ("event.json", r#"{"duration": 5, "events": [{"t": 1, "type": "thruster_failure", "thruster": "nope"}]}"#),
        ("vehicle.json", r#"{"duration": 5, "vehicle": "missing.json"}"#),
    ];
    for (name, text) in cases {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        let opts = RunOptions { log: Some(dir.path().join("x.jsonl")), fast: true, ..RunOptions::default() };
        let err = run_scenario(&p, &opts).expect_err(name);
        assert_eq!(err.exit_code(), 2, "{name}: {err}");
    }
}

#[test]
fn numeric_blow_up_exits_with_3_and_keeps_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("boom.json");
    std::fs::write(&p, r#"{"duration": 5, "initial_state": {"position": [0, 0, 2], "velocity": [1e200, 0, 0]}}"#).unwrap();
    let log = dir.path().join("boom.jsonl");
    let opts = RunOptions { log: Some(log.clone()), fast: true, ..RunOptions::default() };
    let err = run_scenario(&p, &opts).expect_err("should blow up");
    assert_eq!(err.exit_code(), 3, "{err}");
    assert!(err.to_string().contains("blow-up"), "{err}");
    assert!(log.exists());
}
