//! Live mode: broker, real-time simulation loop and WebSocket gateway.

use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use log::{info, warn};
use thiserror::Error;

use super::gateway::Gateway;
use super::scenario::ScenarioError;
use super::sim::{SimError, Simulation};
use crate::bus::{topics, Broker, BrokerServer, BusClient, BusError, LocalClient, TcpClient};

/// Scenario used when `serve` is started without one: the reference vehicle
/// at rest, one metre down, running for as long as the process does.
const IDLE_SCENARIO: &str = r#"{"name": "idle", "duration": 86400, "initial_state": {"position": [0, 0, 1]}}"#;

/// Topics the simulation consumes. Its own echoes on these are not
/// republished, since the broker would hand them straight back.
const INPUTS: [&str; 3] = ["/cmd/*", topics::SIM_PATCH, topics::SIM_FAULT];

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub host: String,
    pub port: u16,
    pub ws_port: u16,
    pub scenario: Option<PathBuf>,
    /// Route the simulation and gateway through the TCP broker instead of
    /// in-process sessions.
    pub external_broker: bool,
    /// Stop after this much simulated time. The scenario's own duration is
    /// ignored in live mode.
    pub duration: Option<f64>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            host: "127.0.0.1".into(),
            port: crate::bus::DEFAULT_PORT,
            ws_port: 8080,
            scenario: None,
            external_broker: false,
            duration: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("cannot bind {what} on {addr}: {source}")]
    Bind { what: &'static str, addr: String, source: io::Error },
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Simulated against wall-clock time since the loop started.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Pacing {
    pub sim_time: f64,
    pub wall_time: f64,
}

impl Pacing {
    /// `|sim - wall| / wall`, zero before any time has passed.
    pub fn drift(&self) -> f64 {
        if self.wall_time > 0.0 {
            (self.sim_time - self.wall_time).abs() / self.wall_time
        } else {
            0.0
        }
    }
}

pub struct ServeHandle {
    pub broker_addr: SocketAddr,
    pub ws_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    pacing: Arc<Mutex<Pacing>>,
    sim: Option<JoinHandle<Result<(), ServeError>>>,
    gateway: Gateway,
    server: BrokerServer,
}

impl ServeHandle {
    pub fn pacing(&self) -> Pacing {
        *self.pacing.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn is_running(&self) -> bool {
        self.sim.as_ref().is_some_and(|h| !h.is_finished())
    }

    pub fn stop(&self) {
        self.stop.store(true, Ordering::Relaxed);
    }

    /// Waits for the simulation loop to end, then closes the gateway and
    /// broker.
    pub fn join(mut self) -> Result<Pacing, ServeError> {
        let outcome = match self.sim.take() {
            Some(h) => h.join().unwrap_or_else(|_| {
                warn!("simulation thread panicked");
                Ok(())
            }),
            None => Ok(()),
        };
        self.gateway.shutdown();
        self.server.shutdown();
        let pacing = self.pacing();
        info!("simulated {:.1} s in {:.1} s wall clock (drift {:.3}%)", pacing.sim_time, pacing.wall_time, 100.0 * pacing.drift());
        outcome.map(|_| pacing)
    }
}

impl Drop for ServeHandle {
    fn drop(&mut self) {
        self.stop();
        if let Some(h) = self.sim.take() {
            let _ = h.join();
        }
    }
}

/// Starts the broker, gateway and simulation loop and returns once all three
/// are listening. Port conflicts are reported here rather than from the
/// background threads.
pub fn serve(options: &ServeOptions) -> Result<ServeHandle, ServeError> {
    let mut sim = match &options.scenario {
        Some(p) => Simulation::from_path(p, None, None)?,
        None => Simulation::from_json(IDLE_SCENARIO)?,
    };
    let broker = Broker::new();
    let bind_addr = |port: u16| format!("{}:{}", options.host, port);

    let addr = bind_addr(options.port);
    let server = BrokerServer::bind(broker.clone(), addr.as_str())
        .map_err(|source| ServeError::Bind { what: "broker", addr, source })?;
    let broker_addr = server.local_addr();

    let addr = bind_addr(options.ws_port);
    let gateway = if options.external_broker {
        Gateway::tcp(broker_addr, addr.as_str())
    } else {
        Gateway::local(&broker, addr.as_str())
    }
    .map_err(|source| ServeError::Bind { what: "websocket gateway", addr, source })?;
    let ws_addr = gateway.local_addr();

    let mut client: Box<dyn BusClient> = if options.external_broker {
        Box::new(TcpClient::connect(broker_addr, "sim")?)
    } else {
        Box::new(LocalClient::connect(&broker, "sim"))
    };
    for p in INPUTS {
        client.subscribe(p)?;
    }

    let stop = Arc::new(AtomicBool::new(false));
    let pacing = Arc::new(Mutex::new(Pacing::default()));
    let end_ticks = options.duration.map(|d| (d / sim.scenario().dt).round() as u64);
    let sim_thread = {
        let (stop, pacing) = (stop.clone(), pacing.clone());
        thread::Builder::new()
            .name("sim".into())
            .spawn(move || live_loop(&mut sim, client.as_mut(), &stop, &pacing, end_ticks))
            .map_err(|source| ServeError::Bind { what: "simulation thread", addr: String::new(), source })?
    };
    info!("broker on {broker_addr}, consoles on ws://{ws_addr}");
    Ok(ServeHandle { broker_addr, ws_addr, stop, pacing, sim: Some(sim_thread), gateway, server })
}

fn is_input(topic: &str) -> bool {
    topic.starts_with("/cmd/") || topic == topics::SIM_PATCH || topic == topics::SIM_FAULT
}

fn live_loop(
    sim: &mut Simulation,
    client: &mut dyn BusClient,
    stop: &AtomicBool,
    pacing: &Mutex<Pacing>,
    end_ticks: Option<u64>,
) -> Result<(), ServeError> {
    let dt = sim.scenario().dt;
    let start = Instant::now();
    let mut last_report = Instant::now();
    while !stop.load(Ordering::Relaxed) && end_ticks.is_none_or(|n| sim.ticks() < n) {
        while let Some(frame) = client.try_recv()? {
            if let Err(e) = sim.apply_bus(&frame.topic, &frame.payload) {
                warn!("rejected {}: {e}", frame.topic);
            }
        }
        let step = sim.tick();
        for m in sim.drain() {
            if !is_input(&m.topic) {
                client.publish(&m.topic, m.timestamp_ns, m.payload.as_bytes())?;
            }
        }
        step?;

        let due = Duration::from_secs_f64(sim.ticks() as f64 * dt);
        if let Some(wait) = due.checked_sub(start.elapsed()) {
            thread::sleep(wait);
        }
        let p = Pacing { sim_time: sim.time(), wall_time: start.elapsed().as_secs_f64() };
        *pacing.lock().unwrap_or_else(|e| e.into_inner()) = p;
        if last_report.elapsed() >= Duration::from_secs(60) {
            info!("t={:.0} s, drift {:.3}%", p.sim_time, 100.0 * p.drift());
            last_report = Instant::now();
        }
    }
    Ok(())
}
