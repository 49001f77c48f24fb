//! `meco`: run, serve, replay and validate scenarios.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use log::{error, info};
use meco_core::bus::{Broker, BrokerServer, BusClient, LocalClient, TcpClient};
use meco_core::runner::gateway::Gateway;
use meco_core::runner::{self, RunOptions, Scenario, ServeOptions};

#[derive(Parser)]
#[command(name = "meco", version, about = "Five-thruster AUV simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a scenario and write a JSON-lines log.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        duration: Option<f64>,
        /// Log file; defaults to $MECO_LOG_DIR/<name>-seed<seed>.jsonl.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Do not pace to the wall clock.
        #[arg(long)]
        fast: bool,
    },
    /// Run the live simulation with a broker and console gateway.
    Serve {
        #[arg(long, default_value_t = meco_core::bus::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value_t = 8080)]
        ws_port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Connect the simulation and gateway to the broker over TCP.
        #[arg(long)]
        external_broker: bool,
        /// Stop after this many simulated seconds.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Republish a log on the bus.
    Replay {
        #[arg(long)]
        log: PathBuf,
        /// Playback rate; "inf" for as fast as possible.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        /// Publish to a running broker instead of starting one.
        #[arg(long)]
        connect: Option<String>,
        #[arg(long, default_value_t = meco_core::bus::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value_t = 8080)]
        ws_port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Hold playback until a console connects to the gateway.
        #[arg(long)]
        wait_console: bool,
    },
    /// Check a scenario and the files it references.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Cmd::Run { scenario, seed, duration, log, fast } => {
            match runner::run_scenario(&scenario, &RunOptions { seed, duration, log, fast }) {
                Ok(s) => {
                    info!("{} records over {} steps written to {}", s.records, s.ticks, s.log_path.display());
                    0
                }
                Err(e) => {
                    error!("{e}");
                    e.exit_code()
                }
            }
        }
        Cmd::Serve { port, ws_port, host, scenario, external_broker, duration } => {
            let options = ServeOptions { host, port, ws_port, scenario, external_broker, duration };
            match runner::serve(&options) {
                Ok(handle) => {
                    while handle.is_running() {
                        std::thread::sleep(Duration::from_millis(100));
                    }
                    handle.stop();
                    match handle.join() {
                        Ok(_) => 0,
                        Err(e) => {
                            error!("{e}");
                            if matches!(e, runner::ServeError::Sim(runner::SimError::BlowUp { .. })) {
                                3
                            } else {
                                1
                            }
                        }
                    }
                }
                Err(runner::ServeError::Scenario(e)) => {
                    error!("{e}");
                    2
                }
                Err(e) => {
                    error!("{e}");
                    1
                }
            }
        }
        Cmd::Replay { log, speed, connect, port, ws_port, host, wait_console } => {
            replay(log, speed, connect, (host, port, ws_port), wait_console)
        }
        Cmd::Validate { scenario } => match Scenario::load(&scenario) {
            Ok(l) => {
                println!(
                    "{}: ok ({} events, {} thrusters, {:.1} s)",
                    scenario.display(),
                    l.scenario.events.len(),
                    l.vehicle.thrusters.len(),
                    l.scenario.duration
                );
                0
            }
            Err(e) => {
                eprintln!("{}: {e}", scenario.display());
                2
            }
        },
    };
    ExitCode::from(code as u8)
}

fn replay(log: PathBuf, speed: f64, connect: Option<String>, bind: (String, u16, u16), wait_console: bool) -> i32 {
    let (host, port, ws_port) = bind;
    let started = (|| -> Result<(Box<dyn BusClient>, Option<(BrokerServer, Gateway)>), String> {
        match connect {
            Some(addr) => Ok((Box::new(TcpClient::connect(addr.as_str(), "replay").map_err(|e| e.to_string())?), None)),
            None => {
                let broker = Broker::new();
                let server = BrokerServer::bind(broker.clone(), (host.as_str(), port)).map_err(|e| format!("broker port {port}: {e}"))?;
                let gateway = Gateway::local(&broker, (host.as_str(), ws_port)).map_err(|e| format!("websocket port {ws_port}: {e}"))?;
                info!("replaying on broker {} and ws://{}", server.local_addr(), gateway.local_addr());
                let client = LocalClient::connect(&broker, "replay");
                if wait_console {
                    info!("waiting for a console");
                    while broker.session_count() < 2 {
                        std::thread::sleep(Duration::from_millis(50));
                    }
                }
                Ok((Box::new(client), Some((server, gateway))))
            }
        }
    })();
    let (mut client, _services) = match started {
        Ok(s) => s,
        Err(e) => {
            error!("{e}");
            return 1;
        }
    };
    let result = runner::replay(&log, speed, |r| {
        client
            .publish(&r.topic, r.timestamp_ns, r.payload.get().as_bytes())
            .map(|_| ())
            .map_err(std::io::Error::other)
    });
    match result {
        Ok(s) => {
            info!("replayed {} records ({} corrupt lines skipped)", s.records, s.warnings);
            0
        }
        Err(runner::ReplayError::BadSpeed(s)) => {
            error!("replay speed must be positive, got {s}");
            2
        }
        Err(e) => {
            error!("{e}");
            1
        }
    }
}
