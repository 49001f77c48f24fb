//! Headline acceptance checks. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

mod common;

use std::io::{BufReader, Read};
use std::net::TcpStream;
use std::panic;
use std::time::{Duration, Instant};

use common::*;
use meco_core::bus::{
    decode_frame, encode_frame, read_frame, send_raw, Broker, BrokerServer, BusClient, ConstrainedClient, Frame,
    FrameKind, Hello, TcpClient, TopicPattern,
};
use meco_core::control::{allocate, build_allocation, ThrustLimits};
use meco_core::dynamics::{self, BodyState, ThrustVector, Wrench};
use meco_core::geometry::{Quat, Vec3};
use meco_core::runner::{read_log, run_scenario, RunOptions, Simulation};
use meco_core::sensors::{battery_update, estimate_pose, load_current, sample_ahrs, AhrsNoise, BatteryState, MountTransform};
use meco_core::vehicle::{neutral_mass, EnvironmentConfig, VehicleConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn random_quat(rng: &mut ChaCha8Rng) -> Quat {
    // Uniform on SO(3) (Shoemake).
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    Quat::from_quaternion(nalgebra::Quaternion::new(a * (tau * u2).sin(), a * (tau * u2).cos(), b * (tau * u3).sin(), b * (tau * u3).cos()))
}

fn buoyancy() -> Outcome {
    let fresh = neutral_mass(0.0236, 1000.0).map_err(|e| e.to_string())?;
    let salt = neutral_mass(0.0236, 1025.0).map_err(|e| e.to_string())?;
    // 0.0236 has no exact binary form, so "exactly" means the nearest double
    // to the decimal product, up to one unit in the last place.
    let ulp = |x: f64| f64::from_bits(x.to_bits() + 1) - x;
    check((fresh - 23.6).abs() <= ulp(23.6), format!("fresh {fresh}"))?;
    check((salt - 24.19).abs() <= ulp(24.19), format!("salt {salt}"))?;
    check((salt - 24.2).abs() <= 0.05, format!("salt {salt} vs published 24.2"))?;
    Ok(format!("fresh {fresh:.12} kg, salt {salt:.12} kg"))
}

fn drain_hours(battery: &BatteryState, amps: f64, dt: f64) -> f64 {
    let mut b = *battery;
    let mut steps = 0u64;
    while !b.is_empty() {
        b = battery_update(&b, amps, dt);
        steps += 1;
    }
    steps as f64 * dt / 3600.0
}

fn endurance() -> Outcome {
    let cfg = VehicleConfig::reference();
    let bat = &cfg.battery;
    check(bat.capacity_wh == 385.0 && bat.nominal_voltage == 15.0, "reference battery is not 385 Wh / 15 V")?;
    let max: Vec<f64> = cfg.thrusters.iter().map(|t| t.max_thrust_fwd).collect();
    let idle = load_current(bat, &vec![0.0; max.len()], &max, false);
    let full = load_current(bat, &max, &max, true);
    check((idle - 1.9).abs() < 1e-12, format!("idle draw {idle} A"))?;
    check((full - 115.0).abs() < 1e-9, format!("full draw {full} A"))?;
    let start = BatteryState::full(bat);
    let (h_idle, h_full) = (drain_hours(&start, idle, 1.0), drain_hours(&start, full, 0.1));
    check((h_idle - 13.5).abs() <= 0.1, format!("idle endurance {h_idle} h"))?;
    check((h_full - 0.223).abs() <= 0.01, format!("full endurance {h_full} h"))?;
    for (h, a) in [(h_idle, idle), (h_full, full)] {
        let expect = endurance_hours(385.0, 15.0, a);
        check((h - expect).abs() <= 1.0 / 3600.0, format!("{h} h vs closed form {expect} h"))?;
    }
    Ok(format!("{h_idle:.3} h at {idle} A, {h_full:.4} h at {full} A"))
}

fn random_wrench(rng: &mut ChaCha8Rng) -> [f64; 6] {
    let mut t = [0.0; 6];
    for (i, v) in t.iter_mut().enumerate() {
        let span = if i < 3 { 60.0 } else { 15.0 };
        *v = rng.random_range(-span..span);
    }
    t
}

fn within_limits(u: &[f64], limits: &ThrustLimits) -> bool {
    u.iter().enumerate().all(|(i, &x)| x.abs() <= limits.limit_for(i, x))
}

fn allocation_oracle() -> Outcome {
    let cfg = VehicleConfig::reference();
    let a = build_allocation(&cfg);
    let limits = ThrustLimits::from_config(&cfg);
    let cols = geometry(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mut tau = random_wrench(&mut rng);
        let mut u = least_squares(&cols, &tau).ok_or("oracle geometry is singular")?;
        // Keep the request inside the thrust envelope so no scaling applies.
        while !within_limits(&u, &limits) {
            tau.iter_mut().for_each(|t| *t *= 0.5);
            u.iter_mut().for_each(|x| *x *= 0.5);
        }
        let out = allocate(&a, &Wrench::from_vector(&tau.into()), &limits);
        let d: f64 = out.thrusts.0.iter().zip(&u).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(d);
    }
    check(worst < 1e-6, format!("max |du| {worst:e}"))?;
    let surge = allocate(&a, &Wrench::new(Vec3::new(10.0, 0.0, 0.0), Vec3::zeros()), &limits);
    let expect = [5.0, 5.0, 0.0, 0.0, 0.0];
    let err = surge.thrusts.0.iter().zip(expect).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    check(err < 1e-9, format!("surge split {:?}", surge.thrusts.0))?;
    Ok(format!("max |du| {worst:.2e} over 1000 wrenches; surge -> {:?}", surge.thrusts.0.iter().map(|x| (x * 1e9).round() / 1e9).collect::<Vec<_>>()))
}

fn saturation() -> Outcome {
    let cfg = VehicleConfig::reference();
    let a = build_allocation(&cfg);
    let limits = ThrustLimits::from_config(&cfg);
    let cols = geometry(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut min_cos, mut n) = (f64::INFINITY, 0);
    while n < 1000 {
        let mut tau = random_wrench(&mut rng);
        let gain = rng.random_range(2.0..20.0);
        tau.iter_mut().for_each(|t| *t *= gain);
        let u_ls = least_squares(&cols, &tau).ok_or("oracle geometry is singular")?;
        if within_limits(&u_ls, &limits) {
            continue;
        }
        n += 1;
        let out = allocate(&a, &Wrench::from_vector(&tau.into()), &limits);
        check(within_limits(&out.thrusts.0, &limits), format!("limits exceeded: {:?}", out.thrusts.0))?;
        let achieved = apply_geometry(&cols, &out.thrusts.0);
        let projection = apply_geometry(&cols, &u_ls);
        min_cos = min_cos.min(cosine(&achieved, &projection));
    }
    check(min_cos >= 1.0 - 1e-9, format!("min cosine {min_cos}"))?;
    Ok(format!("min cosine 1 - {:.1e} over 1000 over-limit wrenches", 1.0 - min_cos))
}

fn mav_standoff() -> Outcome {
    let mut sim = Simulation::from_path(scenario("mav_standoff.json"), None, None).map_err(|e| e.to_string())?;
    let dt = sim.scenario().dt;
    let duration = sim.scenario().duration;
    let (mut lo, mut hi, mut overall_min) = (f64::INFINITY, 0.0_f64, f64::INFINITY);
    while !sim.is_finished() {
        sim.tick().map_err(|e| e.to_string())?;
        sim.drain();
        let r = sim.target_range().ok_or("no target")?;
        overall_min = overall_min.min(r);
        if sim.time() > duration - 60.0 + dt / 2.0 {
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    check(lo >= 0.45, format!("final-minute minimum {lo:.3} m"))?;
    check(lo >= 0.5 && hi <= 0.7, format!("final-minute range [{lo:.3}, {hi:.3}] m"))?;
    Ok(format!("final-minute range [{lo:.3}, {hi:.3}] m, closest approach {overall_min:.3} m"))
}

fn reconfiguration() -> Outcome {
    let mut sim = Simulation::from_path(scenario("reconfiguration.json"), None, None).map_err(|e| e.to_string())?;
    let gains_before = sim.config().control.gains.clone();
    let (patch_t, fail_t, band) = (30.0, 100.0, 0.05);
    let mut last_outside = patch_t;
    let (mut err_before, mut err_after) = (0.0_f64, 0.0_f64);
    let mut density = 0.0;
    while !sim.is_finished() {
        sim.tick().map_err(|e| format!("run crashed: {e}"))?;
        sim.drain();
        let (t, e) = (sim.time(), (sim.depth() - 2.0).abs());
        if t > patch_t && t <= fail_t && e > band {
            last_outside = t;
        }
        if t > fail_t - 20.0 && t <= fail_t {
            err_before = err_before.max(e);
        }
        if t > fail_t {
            err_after = err_after.max(e);
        }
        density = sim.environment().water_density;
    }
    check(density == 1025.0, format!("density after patch {density}"))?;
    check(sim.config().body.cog().x < -0.01, "CoG did not move")?;
    check(sim.config().control.gains == gains_before, "controller gains changed")?;
    let settle = last_outside - patch_t;
    check(settle <= 60.0, format!("depth re-converged {settle:.1} s after the patch"))?;
    check(err_after > err_before, format!("heave loss did not degrade depth ({err_after:.3} vs {err_before:.3})"))?;
    Ok(format!(
        "re-converged to ±{band} m in {settle:.1} s; heave loss raised max depth error {err_before:.3} -> {err_after:.3} m, run completed"
    ))
}

fn misalignment() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_bias, mut worst_truth) = (0.0_f64, 0.0_f64);
    let none = AhrsNoise::none();
    for _ in 0..100 {
        let truth = BodyState::at(Vec3::zeros(), random_quat(&mut rng));
        let actual = MountTransform::new(Vec3::zeros(), random_quat(&mut rng));
        let believed = MountTransform::new(Vec3::zeros(), random_quat(&mut rng));
        let reading = sample_ahrs(&truth, &Vec3::zeros(), 9.81, &actual, &none, &mut rng);
        let est = estimate_pose(&reading, &believed);
        let bias = qmul(qconj(wxyz(&truth.orientation)), wxyz(&est));
        let expect = qmul(wxyz(&actual.rotation), qconj(wxyz(&believed.rotation)));
        worst_bias = worst_bias.max(qdist(bias, expect));

        let reading = sample_ahrs(&truth, &Vec3::zeros(), 9.81, &actual, &none, &mut rng);
        worst_truth = worst_truth.max(qdist(wxyz(&estimate_pose(&reading, &actual)), wxyz(&truth.orientation)));
    }
    check(worst_bias <= 1e-9, format!("bias error {worst_bias:e}"))?;
    // Exact up to the rounding of one rotation and its inverse.
    check(worst_truth <= 4.0 * f64::EPSILON, format!("matched-mount error {worst_truth:e}"))?;
    Ok(format!("bias error {worst_bias:.1e}, matched-mount error {worst_truth:.1e} over 100 pairs"))
}

fn codec_fuzz(rng: &mut ChaCha8Rng, n: usize) -> Result<usize, String> {
    let seed = encode_frame(&Frame::publish("/sensors/depth", 123, br#"{"depth":1.0}"#.to_vec())).unwrap();
    let mut decoded = 0;
    for i in 0..n {
        let buf: Vec<u8> = if i % 2 == 0 {
            let len = rng.random_range(0..64);
            (0..len).map(|_| rng.random()).collect()
        } else {
            let mut b = seed.clone();
            for _ in 0..rng.random_range(1..4) {
                let k = rng.random_range(0..b.len());
                b[k] = rng.random();
            }
            b.truncate(rng.random_range(0..=b.len()));
            b
        };
        match panic::catch_unwind(|| decode_frame(&buf).map(|(_, used)| used)) {
            Ok(Ok(used)) => {
                if used > buf.len() {
                    return Err(format!("consumed {used} of {} bytes", buf.len()));
                }
                decoded += 1;
            }
            Ok(Err(_)) => {}
            Err(_) => return Err(format!("decoder panicked on {buf:02x?}")),
        }
    }
    Ok(decoded)
}

fn fifo_over_tcp(n: u64) -> Result<(u64, u64), String> {
    let server = BrokerServer::bind(Broker::new(), "127.0.0.1:0").map_err(|e| e.to_string())?;
    let mut sub = TcpClient::connect(server.local_addr(), "sub").map_err(|e| e.to_string())?;
    sub.subscribe("/seq").map_err(|e| e.to_string())?;
    let mut publisher = TcpClient::connect(server.local_addr(), "pub").map_err(|e| e.to_string())?;
    let producer = std::thread::spawn(move || {
        for i in 0..n {
            publisher.publish("/seq", i, &i.to_be_bytes()).unwrap();
        }
    });
    let (mut last, mut received) = (None::<u64>, 0u64);
    loop {
        match sub.recv_timeout(Duration::from_millis(500)).map_err(|e| e.to_string())? {
            Some(f) => {
                let v = u64::from_be_bytes(f.payload[..8].try_into().unwrap());
                if last.is_some_and(|l| v <= l) {
                    return Err(format!("{v} after {last:?}"));
                }
                last = Some(v);
                received += 1;
                if v == n - 1 {
                    break;
                }
            }
            None if producer.is_finished() => break,
            None => {}
        }
    }
    producer.join().map_err(|_| "publisher panicked")?;
    Ok((received, last.unwrap_or(0)))
}

fn wildcard_table() -> Result<usize, String> {
    let table: [(&str, &str, bool); 14] = [
        ("/sensors/*", "/sensors/ahrs", true),
        ("/sensors/*", "/sensors/depth", true),
        ("/sensors/*", "/actuators/pwm", false),
        ("/sensors/*", "/sensors", false),
        ("/sensors/*", "/sensors/", false),
        ("/sensors/*", "/sensors/a/b", true),
        ("/sensors/*", "/sensorsx/a", false),
        ("/sensors/ahrs", "/sensors/ahrs", true),
        ("/sensors/ahrs", "/sensors/ahrs2", false),
        ("*", "/anything/at/all", true),
        ("/cmd/*", "/cmd/token", true),
        ("/cmd/*", "/cmdx", false),
        ("/a/*/b", "/a/x/b", false),
        ("/a*", "/a/b", false),
    ];
    let mut checked = 0;
    for (pattern, topic, want) in table {
        let got = match TopicPattern::parse(pattern) {
            Ok(p) => p.matches(topic),
            Err(_) => false,
        };
        if got != want {
            return Err(format!("{pattern} vs {topic}: got {got}"));
        }
        checked += 1;
    }
    for bad in ["/a/*/b", "/a*", "", "**"] {
        if TopicPattern::parse(bad).is_ok() {
            return Err(format!("pattern {bad:?} accepted"));
        }
    }
    Ok(checked)
}

fn constrained_cap() -> Result<(), String> {
    let server = BrokerServer::bind(Broker::new(), "127.0.0.1:0").map_err(|e| e.to_string())?;
    let topics: Vec<String> = (0..9).map(|i| format!("/mcu/t{i}")).collect();
    let names: Vec<&str> = topics.iter().map(String::as_str).collect();
    ConstrainedClient::tcp(server.local_addr(), "eight", &names[..4], &names[4..8], 16).map_err(|e| format!("8 topics: {e}"))?;

    let mut raw = TcpStream::connect(server.local_addr()).map_err(|e| e.to_string())?;
    raw.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let hello = Hello::constrained("nine", &names[..5], &names[5..9], 16);
    let frame = Frame::new(FrameKind::Hello, "", 0, serde_json::to_vec(&hello).unwrap());
    send_raw(&mut raw, &encode_frame(&frame).unwrap()).map_err(|e| e.to_string())?;
    let mut reader = BufReader::new(raw.try_clone().unwrap());
    let reply = read_frame(&mut reader).map_err(|e| e.to_string())?.ok_or("no reply to 9-topic hello")?;
    check(reply.kind == FrameKind::Error, format!("9 topics answered with {:?}", reply.kind))?;

    let ok = Hello::constrained("one", &names[..1], &[], 16);
    let mut raw = TcpStream::connect(server.local_addr()).map_err(|e| e.to_string())?;
    raw.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let mut bytes = encode_frame(&Frame::new(FrameKind::Hello, "", 0, serde_json::to_vec(&ok).unwrap())).unwrap();
    bytes.extend(encode_frame(&Frame::publish("/mcu/other", 0, vec![b' '; 16])).unwrap());
    send_raw(&mut raw, &bytes).map_err(|e| e.to_string())?;
    let mut reader = BufReader::new(raw.try_clone().unwrap().take(1 << 16));
    let ack = read_frame(&mut reader).map_err(|e| e.to_string())?.ok_or("no hello ack")?;
    check(ack.kind == FrameKind::Hello, format!("hello answered with {:?}", ack.kind))?;
    let err = read_frame(&mut reader).map_err(|e| e.to_string())?.ok_or("no reply to unregistered publish")?;
    check(err.kind == FrameKind::Error, format!("unregistered publish answered with {:?}", err.kind))?;
    Ok(())
}

fn bus_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let decoded = codec_fuzz(&mut rng, 1_000_000)?;
    let (received, last) = fifo_over_tcp(100_000)?;
    check(last == 99_999, format!("last sequence number {last}"))?;
    let rows = wildcard_table()?;
    constrained_cap()?;
    Ok(format!(
        "fuzz 1e6 buffers ({decoded} decoded, 0 panics); FIFO {received}/100000 delivered in order over TCP; {rows} wildcard rows; 8-topic cap enforced"
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut hashes = Vec::new();
    for i in 0..2 {
        let log = dir.path().join(format!("run{i}.jsonl"));
        let opts = RunOptions { log: Some(log.clone()), fast: true, ..RunOptions::default() };
        run_scenario(scenario("mission_end_to_end.json"), &opts).map_err(|e| e.to_string())?;
        hashes.push(sha256_file(&log));
    }
    check(hashes[0] == hashes[1], format!("{} != {}", hashes[0], hashes[1]))?;

    // The run must actually exercise arm -> menu -> MAV -> disarm.
    let log = read_log(dir.path().join("run0.jsonl")).map_err(|e| e.to_string())?;
    let mut stages = Vec::new();
    for r in log.records.iter().filter(|r| r.topic == "/mission/state") {
        let v: serde_json::Value = serde_json::from_str(r.payload.get()).unwrap();
        let stage = match (v["armed"].as_bool(), v["behavior"].as_str(), v["menu_state"].as_str()) {
            (Some(true), Some("mav_follow"), _) => "mav",
            (Some(true), _, Some("BROWSING" | "CONFIRM")) => "menu",
            (Some(true), _, _) => "armed",
            (Some(false), _, _) if stages.contains(&"mav") => "disarmed",
            _ => continue,
        };
        if stages.last() != Some(&stage) {
            stages.push(stage);
        }
    }
    let want = ["armed", "menu", "mav", "disarmed"];
    let mut it = stages.iter();
    check(want.iter().all(|w| it.any(|s| s == w)), format!("mission stages {stages:?}"))?;
    Ok(format!("sha256 {} for both runs; stages {:?}", &hashes[0][..16], stages))
}

fn neutral_body() -> VehicleConfig {
    let mut cfg = VehicleConfig::reference();
    cfg.body.cob = Vec3::zeros();
    cfg.validated().unwrap()
}

fn dynamics_properties() -> Outcome {
    let env = EnvironmentConfig::freshwater();
    let dt = 0.01;

    // Equilibrium: reference vehicle at rest, submerged, no thrust.
    let cfg = VehicleConfig::reference();
    let zero = ThrustVector::zeros(cfg.thrusters.len());
    let start = BodyState::at(Vec3::new(0.0, 0.0, 2.0), Quat::identity());
    let mut s = start;
    for _ in 0..1000 {
        s = dynamics::step(&s, &cfg, &env, &zero, dt).map_err(|e| e.to_string())?;
    }
    let drift = (s.position - start.position).norm() + s.velocity.norm() + s.angular_velocity.norm();
    check(drift <= 1e-9, format!("equilibrium drift {drift:e}"))?;

    // Dissipativity: with restoring forces balanced, kinetic energy never rises.
    let cfg_n = neutral_body();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut rises = 0;
    for _ in 0..20 {
        let mut s = BodyState::at(Vec3::new(0.0, 0.0, 3.0), random_quat(&mut rng));
        s.velocity = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        s.angular_velocity = Vec3::from_fn(|_, _| rng.random_range(-2.0..2.0));
        let mut e = s.kinetic_energy(&cfg_n.body);
        for _ in 0..2000 {
            s = dynamics::step(&s, &cfg_n, &env, &zero, dt).map_err(|e| e.to_string())?;
            let next = s.kinetic_energy(&cfg_n.body);
            if next > e * (1.0 + 1e-12) + 1e-15 {
                rises += 1;
            }
            e = next;
        }
    }
    check(rises == 0, format!("kinetic energy rose on {rises} steps"))?;

    // Quaternion norm over 10^6 steps of a tumbling body.
    let mut s = BodyState::at(Vec3::new(0.0, 0.0, 3.0), Quat::identity());
    s.angular_velocity = Vec3::new(1.3, -0.7, 2.1);
    let mut worst: f64 = 0.0;
    for _ in 0..1_000_000 {
        s = dynamics::step(&s, &cfg_n, &env, &zero, 0.001).map_err(|e| e.to_string())?;
        s.angular_velocity = Vec3::new(1.3, -0.7, 2.1);
        s.velocity = Vec3::zeros();
        worst = worst.max((s.orientation.as_ref().norm() - 1.0).abs());
    }
    check(worst < 1e-9, format!("quaternion norm drift {worst:e}"))?;

    // Terminal surge speed under a constant 40 N push.
    let a = build_allocation(&cfg);
    let push = allocate(&a, &Wrench::new(Vec3::new(40.0, 0.0, 0.0), Vec3::zeros()), &ThrustLimits::from_config(&cfg));
    let mut s = BodyState::at(Vec3::new(0.0, 0.0, 2.0), Quat::identity());
    for _ in 0..6000 {
        s = dynamics::step(&s, &cfg, &env, &push.thrusts, dt).map_err(|e| e.to_string())?;
    }
    let expect = terminal_speed(40.0, cfg.body.linear_drag[0], cfg.body.quadratic_drag[0]);
    let rel = (s.velocity.x - expect).abs() / expect;
    check(rel < 0.01, format!("terminal speed {} vs {expect}", s.velocity.x))?;

    Ok(format!(
        "equilibrium drift {drift:.1e}; no energy rise in 40000 steps; |q|-1 <= {worst:.1e} over 1e6 steps; terminal {:.4} m/s vs {expect:.4} ({:.3}%)",
        s.velocity.x,
        100.0 * rel
    ))
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check, Option<f64>); 10] = [
        ("Buoyancy figures", buoyancy, None),
        ("Endurance figures", endurance, Some(1.0)),
        ("Allocation oracle equivalence", allocation_oracle, Some(5.0)),
        ("Saturation property", saturation, Some(5.0)),
        ("MAV standoff", mav_standoff, Some(10.0)),
        ("Reconfiguration continuity", reconfiguration, Some(15.0)),
        ("Misalignment decoupling", misalignment, Some(1.0)),
        ("Bus suite", bus_suite, Some(60.0)),
        ("Determinism", determinism, Some(20.0)),
        ("Dynamics properties", dynamics_properties, Some(60.0)),
    ];
    let mut failed = Vec::new();
    for (name, f, budget) in criteria {
        let t0 = Instant::now();
        let outcome = panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        let outcome = match (outcome, budget) {
            (Ok(d), Some(b)) if secs > b => Err(format!("{d}; took {secs:.2} s, budget {b} s")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} ({secs:.2} s)"),
            Err(why) => {
                println!("FAIL {name}: {why} ({secs:.2} s)");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed: {failed:?}");
        std::process::exit(1);
    }
}
