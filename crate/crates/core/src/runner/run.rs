use std::io;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::log::{LogError, LogWriter};
use super::scenario::ScenarioError;
use super::sim::{SimError, Simulation};
use crate::dynamics::BodyState;

/// Directory for logs when `--log` is not given.
pub const LOG_DIR_ENV: &str = "MECO_LOG_DIR";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub duration: Option<f64>,
    pub log: Option<PathBuf>,
    /// Run as fast as possible instead of pacing to the wall clock.
    pub fast: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub log_path: PathBuf,
    pub records: u64,
    pub ticks: u64,
    pub final_state: BodyState,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{source} (partial log at {log_path})")]
    Sim { source: SimError, log_path: PathBuf },
    #[error("log {path}: {source}")]
    Log { path: PathBuf, source: LogError },
}

impl RunError {
    /// Process exit status: 2 for an invalid scenario, 3 for a numeric
    /// blow-up, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Scenario(_) => 2,
            RunError::Sim { source: SimError::BlowUp { .. }, .. } => 3,
            _ => 1,
        }
    }
}

/// `$MECO_LOG_DIR/<name>-seed<seed>.jsonl`, or under `./logs`.
pub fn default_log_path(scenario_path: &Path, name: &str, seed: u64) -> PathBuf {
    let dir = std::env::var_os(LOG_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("logs"));
    let stem = if name.is_empty() {
        scenario_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into())
    } else {
        name.to_string()
    };
    dir.join(format!("{stem}-seed{seed}.jsonl"))
}

pub fn run_scenario(path: impl AsRef<Path>, options: &RunOptions) -> Result<RunSummary, RunError> {
    let path = path.as_ref();
    let mut sim = Simulation::from_path(path, options.seed, options.duration)?;
    let log_path = options
        .log
        .clone()
        .unwrap_or_else(|| default_log_path(path, &sim.scenario().name, sim.scenario().seed));
    let log_err = |source: LogError| RunError::Log { path: log_path.clone(), source };
    let mut log = LogWriter::create(&log_path).map_err(|e| log_err(e.into()))?;

    let start = Instant::now();
    let dt = sim.scenario().dt;
    let mut failure = None;
    while !sim.is_finished() {
        let step = sim.tick();
        for m in sim.drain() {
            log.write(&m.topic, m.timestamp_ns, &m.payload).map_err(log_err)?;
        }
        if let Err(e) = step {
            failure = Some(e);
            break;
        }
        if !options.fast {
            let due = Duration::from_secs_f64(sim.ticks() as f64 * dt);
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                thread::sleep(wait);
            }
        }
    }
    let records = log.records();
    log.finish().map_err(|e: io::Error| log_err(e.into()))?;
    if let Some(source) = failure {
        return Err(RunError::Sim { source, log_path });
    }
    Ok(RunSummary { log_path, records, ticks: sim.ticks(), final_state: *sim.state() })
}
