//! Inputs to a running simulation, shared by scripted events and bus messages.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behaviors::{H2RToken, Token, TokenSource};
use crate::bus::topics;
use crate::control::{AutopilotMode, PilotInput, Setpoints};
use crate::vehicle::{ConfigPatch, SetOp};

/// Runtime reconfiguration, the payload of `/sim/patch`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimPatch {
    #[serde(default)]
    pub vehicle: ConfigPatch,
    /// Dotted-path sets on the environment, e.g. `water_density`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub environment: Vec<SetOp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Command {
    Token {
        token: Token,
        #[serde(default)]
        source: TokenSource,
    },
    Arm,
    Disarm,
    /// Start a behavior by its menu action id.
    Start { action: String },
    Stop,
    Pilot(PilotInput),
    Setpoint(Setpoints),
    Mode { mode: AutopilotMode },
    Patch(SimPatch),
    /// Physical loss of a thruster; the controller is not told.
    ThrusterFailure { thruster: String },
    ThrusterRestore { thruster: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct ArmMessage {
    armed: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModeMessage {
    mode: AutopilotMode,
}

/// `/cmd/behavior`: start the named action, or stop when it is null.
#[derive(Debug, Serialize, Deserialize)]
struct BehaviorMessage {
    action: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FaultMessage {
    thruster: String,
    failed: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommandError {
    #[error("topic {0} carries no command")]
    UnknownTopic(String),
    #[error("bad {topic} payload: {message}")]
    Payload { topic: String, message: String },
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("command payloads serialize")
}

fn parse<'a, T: Deserialize<'a>>(topic: &str, payload: &'a [u8]) -> Result<T, CommandError> {
    serde_json::from_slice(payload).map_err(|e| CommandError::Payload { topic: topic.to_string(), message: e.to_string() })
}

impl Command {
    /// Topic and JSON payload carrying this command on the bus.
    pub fn to_bus(&self, time: f64) -> (&'static str, String) {
        match self {
            Command::Token { token, source } => {
                (topics::CMD_TOKEN, json(&H2RToken { token: *token, source: *source, timestamp: time }))
            }
            Command::Arm => (topics::CMD_ARM, json(&ArmMessage { armed: true })),
            Command::Disarm => (topics::CMD_ARM, json(&ArmMessage { armed: false })),
            Command::Start { action } => (topics::CMD_BEHAVIOR, json(&BehaviorMessage { action: Some(action.clone()) })),
            Command::Stop => (topics::CMD_BEHAVIOR, json(&BehaviorMessage { action: None })),
            Command::Pilot(p) => (topics::CMD_PILOT, json(p)),
            Command::Setpoint(s) => (topics::CMD_SETPOINT, json(s)),
            Command::Mode { mode } => (topics::CMD_MODE, json(&ModeMessage { mode: *mode })),
            Command::Patch(p) => (topics::SIM_PATCH, json(p)),
            Command::ThrusterFailure { thruster } => {
                (topics::SIM_FAULT, json(&FaultMessage { thruster: thruster.clone(), failed: true }))
            }
            Command::ThrusterRestore { thruster } => {
                (topics::SIM_FAULT, json(&FaultMessage { thruster: thruster.clone(), failed: false }))
            }
        }
    }

    pub fn from_bus(topic: &str, payload: &[u8]) -> Result<Command, CommandError> {
        Ok(match topic {
            topics::CMD_TOKEN => {
                let t: H2RToken = parse(topic, payload)?;
                Command::Token { token: t.token, source: t.source }
            }
            topics::CMD_ARM => {
                if parse::<ArmMessage>(topic, payload)?.armed {
                    Command::Arm
                } else {
                    Command::Disarm
                }
            }
            topics::CMD_BEHAVIOR => match parse::<BehaviorMessage>(topic, payload)?.action {
                Some(action) => Command::Start { action },
                None => Command::Stop,
            },
            topics::CMD_PILOT => Command::Pilot(parse(topic, payload)?),
            topics::CMD_SETPOINT => Command::Setpoint(parse(topic, payload)?),
            topics::CMD_MODE => Command::Mode { mode: parse::<ModeMessage>(topic, payload)?.mode },
            topics::SIM_PATCH => Command::Patch(parse(topic, payload)?),
            topics::SIM_FAULT => {
                let f: FaultMessage = parse(topic, payload)?;
                if f.failed {
                    Command::ThrusterFailure { thruster: f.thruster }
                } else {
                    Command::ThrusterRestore { thruster: f.thruster }
                }
            }
            other => return Err(CommandError::UnknownTopic(other.to_string())),
        })
    }
}
