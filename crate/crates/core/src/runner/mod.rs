//! Headless scenario runs, logging, replay and the live gateway.

mod command;
mod log;
mod run;
mod scenario;
mod sim;

#[cfg(feature = "net")]
pub mod gateway;
#[cfg(feature = "net")]
mod serve;

pub use self::log::{
    for_each_record, read_log, replay, LogContents, LogError, LogRecord, LogWriter, ReplayError, ReplaySummary,
};
pub use command::{Command, CommandError, SimPatch};
pub use run::{default_log_path, run_scenario, RunError, RunOptions, RunSummary, LOG_DIR_ENV};
pub use scenario::{
    default_menu, AutopilotSpec, InitialState, LoadedScenario, Rates, Scenario, ScenarioError, ScriptedEvent,
    TargetSpec, Waypoint,
};
#[cfg(feature = "net")]
pub use serve::{serve, Pacing, ServeError, ServeHandle, ServeOptions};
pub use sim::{
    Message, PwmMessage, RunLoopError, SimError, SimEvent, SimStateMessage, Simulation, ThrustersMessage,
};
