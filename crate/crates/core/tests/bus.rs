use std::io::BufReader;
use std::net::{SocketAddr, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use meco_core::bus::{
    decode_frame, encode_frame, read_frame, send_raw, Broker, BrokerServer, BusClient, DecodeError, Frame, FrameKind,
    Hello, LocalClient, TcpClient, QUEUE_CAPACITY,
};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = FrameKind> {
    (0u8..6).prop_map(|b| FrameKind::from_u8(b).unwrap())
}

fn frame() -> impl Strategy<Value = Frame> {
    (kind(), "/[a-z/_*]{1,40}", any::<u64>(), prop::collection::vec(any::<u8>(), 0..512))
        .prop_map(|(k, topic, ts, payload)| Frame::new(k, topic, ts, payload))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn codec_roundtrip(f in frame()) {
        let bytes = encode_frame(&f).unwrap();
        prop_assert_eq!(bytes.len(), f.encoded_len());
        let (back, used) = decode_frame(&bytes).unwrap();
        prop_assert_eq!(used, bytes.len());
        prop_assert_eq!(back, f);
    }

    #[test]
    fn every_strict_prefix_is_incomplete(f in frame(), cut in any::<prop::sample::Index>()) {
        let bytes = encode_frame(&f).unwrap();
        let n = cut.index(bytes.len());
        match decode_frame(&bytes[..n]) {
            Err(e @ DecodeError::Incomplete { .. }) => prop_assert!(!e.is_corrupt()),
            other => prop_assert!(false, "prefix of {n} bytes gave {other:?}"),
        }
    }

    #[test]
    fn concatenated_frames_decode_in_sequence(fs in prop::collection::vec(frame(), 1..10)) {
        let stream: Vec<u8> = fs.iter().flat_map(|f| encode_frame(f).unwrap()).collect();
        let mut reader = BufReader::with_capacity(7, stream.as_slice());
        for f in &fs {
            let got = read_frame(&mut reader).unwrap();
            prop_assert_eq!(got.as_ref(), Some(f));
        }
        prop_assert!(read_frame(&mut reader).unwrap().is_none());
    }
}

#[test]
fn publish_frame_is_bit_exact() {
    let mut want = vec![0x4D, 0x45, 0x43, 0x4F, 0x01, 0x03, 0x00, 0x02, 0x2F, 0x78];
    want.extend([0u8; 8]);
    want.extend([0u8; 4]);
    assert_eq!(encode_frame(&Frame::publish("/x", 0, Vec::new())).unwrap(), want);
}

#[test]
fn bad_magic_is_rejected_immediately() {
    assert!(matches!(decode_frame(b"MECX\x01\x03"), Err(DecodeError::BadMagic)));
    assert!(matches!(decode_frame(b"X"), Err(DecodeError::BadMagic)));
}

#[test]
fn no_subscribers_means_zero_deliveries() {
    let broker = Broker::new();
    let mut c = LocalClient::connect(&broker, "lonely");
    assert_eq!(c.publish("/nobody", 0, b"{}").unwrap().delivered, Some(0));
}

#[test]
fn hundred_publishes_arrive_in_order() {
    let broker = Broker::new();
    let mut sub = LocalClient::connect(&broker, "sub");
    sub.subscribe("/seq").unwrap();
    let mut p = LocalClient::connect(&broker, "pub");
    for i in 0..100u64 {
        assert_eq!(p.publish("/seq", i, &i.to_be_bytes()).unwrap().delivered, Some(1));
    }
    for i in 0..100u64 {
        assert_eq!(sub.try_recv().unwrap().unwrap().timestamp_ns, i);
    }
    assert!(sub.try_recv().unwrap().is_none());
}

#[test]
fn in_process_fifo_delivers_everything_when_drained() {
    let broker = Broker::new();
    let mut sub = LocalClient::connect(&broker, "sub");
    sub.subscribe("/seq").unwrap();
    let mut p = LocalClient::connect(&broker, "pub");
    let mut next = 0u64;
    for batch in 0..100u64 {
        for i in 0..1000 {
            let seq = batch * 1000 + i;
            p.publish("/seq", seq, &seq.to_be_bytes()).unwrap();
        }
        while let Some(f) = sub.try_recv().unwrap() {
            assert_eq!(u64::from_be_bytes(f.payload[..].try_into().unwrap()), next);
            next += 1;
        }
    }
    assert_eq!(next, 100_000);
    assert_eq!(sub.dropped(), 0);
}

#[test]
fn concurrent_consumer_sees_an_ordered_subsequence() {
    let broker = Broker::new();
    let mut sub = LocalClient::connect(&broker, "sub");
    sub.subscribe("/seq").unwrap();
    let mut p = LocalClient::connect(&broker, "pub");
    let n = 100_000u64;
    let producer = thread::spawn(move || {
        for i in 0..n {
            p.publish("/seq", i, &i.to_be_bytes()).unwrap();
        }
    });
    let (mut last, mut got) = (None::<u64>, 0u64);
    while last != Some(n - 1) {
        let Some(f) = sub.recv_timeout(Duration::from_secs(5)).unwrap() else { break };
        let v = u64::from_be_bytes(f.payload[..].try_into().unwrap());
        assert!(last.is_none_or(|l| v > l), "{v} after {last:?}");
        last = Some(v);
        got += 1;
    }
    producer.join().unwrap();
    assert_eq!(last, Some(n - 1));
    assert_eq!(got + sub.dropped(), n, "every frame is delivered or counted as dropped");
}

#[test]
fn slow_subscriber_keeps_the_newest_frames() {
    let broker = Broker::new();
    let mut slow = LocalClient::connect(&broker, "slow");
    slow.subscribe("/sensors/*").unwrap();
    let mut p = LocalClient::connect(&broker, "pub");
    let n = 5000u64;
    for i in 0..n {
        p.publish("/sensors/depth", i, b"{}").unwrap();
    }
    let dropped = n - QUEUE_CAPACITY as u64;
    assert_eq!(slow.dropped(), dropped);
    assert_eq!(broker.stats().topics["/sensors/depth"].dropped, dropped);
    for i in dropped..n {
        assert_eq!(slow.try_recv().unwrap().unwrap().timestamp_ns, i);
    }
    assert!(slow.try_recv().unwrap().is_none());
}

#[test]
fn wildcards_fan_out_over_tcp() {
    let server = BrokerServer::bind(Broker::new(), "127.0.0.1:0").unwrap();
    let mut sensors = TcpClient::connect(server.local_addr(), "sensors").unwrap();
    sensors.subscribe("/sensors/*").unwrap();
    let mut all = TcpClient::connect(server.local_addr(), "all").unwrap();
    all.subscribe("*").unwrap();
    let mut p = TcpClient::connect(server.local_addr(), "pub").unwrap();
    for t in ["/sensors/ahrs", "/sensors/depth", "/actuators/pwm"] {
        p.publish(t, 0, b"{}").unwrap();
    }
    let drain = |c: &mut TcpClient, n: usize| {
        (0..n).map(|_| c.recv_timeout(Duration::from_secs(5)).unwrap().unwrap().topic.clone()).collect::<Vec<_>>()
    };
    assert_eq!(drain(&mut sensors, 2), ["/sensors/ahrs", "/sensors/depth"]);
    assert_eq!(drain(&mut all, 3), ["/sensors/ahrs", "/sensors/depth", "/actuators/pwm"]);
    assert!(sensors.recv_timeout(Duration::from_millis(200)).unwrap().is_none());
    assert_eq!(p.topic_list().unwrap(), ["/actuators/pwm", "/sensors/ahrs", "/sensors/depth"]);
}

/// Subscribes to everything over a raw socket and then never reads again.
fn stalled_subscriber(addr: SocketAddr) -> TcpStream {
    let mut s = TcpStream::connect(addr).unwrap();
    let hello = Frame::new(FrameKind::Hello, "", 0, serde_json::to_vec(&Hello::full("stalled")).unwrap());
    let mut bytes = encode_frame(&hello).unwrap();
    bytes.extend(encode_frame(&Frame::new(FrameKind::Subscribe, "*", 0, Vec::new())).unwrap());
    send_raw(&mut s, &bytes).unwrap();
    let mut r = BufReader::new(s.try_clone().unwrap());
    assert_eq!(read_frame(&mut r).unwrap().unwrap().kind, FrameKind::Hello);
    assert_eq!(read_frame(&mut r).unwrap().unwrap().kind, FrameKind::Subscribe);
    s
}

/// Publishes `n` paced frames and returns the healthy subscriber's p99
/// end-to-end latency. `fault` runs once, a tenth of the way in.
fn p99_latency(addr: SocketAddr, n: u64, mut fault: impl FnMut()) -> Duration {
    let mut healthy = TcpClient::connect(addr, "healthy").unwrap();
    healthy.subscribe("/lat").unwrap();
    let mut p = TcpClient::connect(addr, "pub").unwrap();
    let origin = Instant::now();
    let done = Arc::new(AtomicBool::new(false));
    let reader = {
        let done = done.clone();
        thread::spawn(move || {
            let mut lat = Vec::new();
            let mut last = None::<u64>;
            while !done.load(Ordering::Acquire) || last != Some(n - 1) {
                let Some(f) = healthy.recv_timeout(Duration::from_secs(5)).unwrap() else { break };
                let seq = u64::from_be_bytes(f.payload[..8].try_into().unwrap());
                assert!(last.is_none_or(|l| seq > l));
                last = Some(seq);
                lat.push(origin.elapsed() - Duration::from_nanos(f.timestamp_ns));
                if seq == n - 1 {
                    break;
                }
            }
            lat
        })
    };
    let mut payload = vec![0u8; 4096];
    for i in 0..n {
        if i == n / 10 {
            fault();
        }
        payload[..8].copy_from_slice(&i.to_be_bytes());
        p.publish("/lat", origin.elapsed().as_nanos() as u64, &payload).unwrap();
        let until = Instant::now() + Duration::from_micros(100);
        while Instant::now() < until {
            std::hint::spin_loop();
        }
    }
    done.store(true, Ordering::Release);
    let mut lat = reader.join().unwrap();
    assert!(lat.len() as u64 >= n * 99 / 100, "healthy subscriber got {} of {n}", lat.len());
    lat.sort();
    lat[lat.len() * 99 / 100]
}

/// Keeps the timing-sensitive tests from competing for the CPU.
static TIMING: Mutex<()> = Mutex::new(());

#[test]
fn failing_subscribers_do_not_stall_others() {
    let _serial = TIMING.lock().unwrap_or_else(|e| e.into_inner());
    let server = BrokerServer::bind(Broker::new(), "127.0.0.1:0").unwrap();
    let addr = server.local_addr();
    let n = 5000;
    let _ = p99_latency(addr, 500, || {});
    let base = p99_latency(addr, n, || {});

    let mut faults = Vec::new();
    let mut crashing = Some(TcpClient::connect(addr, "crashing").unwrap());
    crashing.as_mut().unwrap().subscribe("*").unwrap();
    let faulty = p99_latency(addr, n, || {
        // 4 KiB frames overflow the stalled sockets' buffers within the run.
        faults.extend((0..3).map(|_| stalled_subscriber(addr)));
        drop(crashing.take());
    });
    println!("publish latency p99: {base:?} healthy, {faulty:?} with stalled and crashed subscribers");
    assert!(server.broker().stats().topics["/lat"].dropped > 0, "stalled subscribers never overflowed");
    assert!(faulty <= base * 2, "p99 {faulty:?} vs baseline {base:?}");
    drop(faults);
}

#[test]
fn loopback_throughput_is_reported() {
    let _serial = TIMING.lock().unwrap_or_else(|e| e.into_inner());
    let server = BrokerServer::bind(Broker::new(), "127.0.0.1:0").unwrap();
    let mut sub = TcpClient::connect(server.local_addr(), "sub").unwrap();
    sub.subscribe("/tp").unwrap();
    let mut p = TcpClient::connect(server.local_addr(), "pub").unwrap();
    let n = 200_000u64;
    let start = Instant::now();
    let producer = thread::spawn(move || {
        let payload = [7u8; 64];
        for i in 0..n {
            p.publish("/tp", i, &payload).unwrap();
        }
    });
    let mut got = 0u64;
    while let Some(f) = sub.recv_timeout(Duration::from_millis(500)).unwrap() {
        got += 1;
        if f.timestamp_ns == n - 1 {
            break;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    producer.join().unwrap();
    println!("throughput: {:.0} frames/s delivered ({got}/{n} in {secs:.2} s, 64-byte payloads)", got as f64 / secs);
    assert!(got > 0);
}
