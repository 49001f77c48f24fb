use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::command::{Command, SimPatch};
use crate::behaviors::{FollowParams, MenuItem, MenuModel};
use crate::control::{AutopilotMode, Setpoints};
use crate::dynamics::{BodyState, MAX_DT};
use crate::geometry::{from_euler, Vec3};
use crate::sensors::AhrsNoise;
use crate::vehicle::{apply_patch, apply_sets, load_config, ConfigError, EnvironmentConfig, VehicleConfig};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed scenario: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid scenario field {field}: {reason}")]
    Invalid { field: String, reason: String },
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, reason: impl ToString) -> Self {
        ScenarioError::Invalid { field: field.into(), reason: reason.to_string() }
    }

    /// The scenario field (or file) at fault.
    pub fn field(&self) -> String {
        match self {
            ScenarioError::Io { path, .. } | ScenarioError::Parse { path, .. } => path.display().to_string(),
            ScenarioError::Invalid { field, .. } => field.clone(),
        }
    }
}

fn config_error(prefix: &str, e: ConfigError) -> ScenarioError {
    let field = match (e.path(), prefix.is_empty()) {
        (Some(p), true) => p.to_string(),
        (Some(p), false) => format!("{prefix}.{p}"),
        (None, _) => prefix.to_string(),
    };
    ScenarioError::invalid(field, e)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default = "Vec3::zeros")]
    pub position: Vec3,
    /// Roll, pitch, yaw in radians.
    #[serde(default)]
    pub rpy: [f64; 3],
    #[serde(default = "Vec3::zeros")]
    pub velocity: Vec3,
    #[serde(default = "Vec3::zeros")]
    pub angular_velocity: Vec3,
}

impl InitialState {
    pub fn body_state(&self) -> BodyState {
        let [r, p, y] = self.rpy;
        BodyState {
            position: self.position,
            orientation: from_euler(r, p, y),
            velocity: self.velocity,
            angular_velocity: self.angular_velocity,
            time: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpec {
    Static(Vec3),
    /// Piecewise-linear path, held at the end points.
    Waypoints(Vec<Waypoint>),
}

impl TargetSpec {
    pub fn position(&self, t: f64) -> Vec3 {
        match self {
            TargetSpec::Static(p) => *p,
            TargetSpec::Waypoints(w) => {
                let i = w.partition_point(|p| p.t <= t);
                if i == 0 {
                    return w[0].position;
                }
                if i == w.len() {
                    return w[w.len() - 1].position;
                }
                let (a, b) = (&w[i - 1], &w[i]);
                let s = (t - a.t) / (b.t - a.t);
                a.position + (b.position - a.position) * s
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rates {
    pub control_hz: f64,
    pub state_hz: f64,
    pub uhri_hz: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Rates { control_hz: 100.0, state_hz: 20.0, uhri_hz: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutopilotSpec {
    pub mode: AutopilotMode,
    pub setpoints: Setpoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedEvent {
    pub t: f64,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    /// Vehicle document, relative to the scenario file. The built-in reference
    /// vehicle when absent.
    #[serde(default)]
    pub vehicle: Option<String>,
    /// Applied to the vehicle before the run starts.
    #[serde(default)]
    pub vehicle_patch: Option<SimPatch>,
    /// Menu document, relative to the scenario file.
    #[serde(default)]
    pub menu: Option<String>,
    #[serde(default)]
    pub environment: EnvironmentConfig,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default)]
    pub target: Option<TargetSpec>,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub rates: Rates,
    #[serde(default)]
    pub autopilot: AutopilotSpec,
    #[serde(default)]
    pub armed: bool,
    #[serde(default)]
    pub follow: FollowParams,
    /// Zero every noise source and camera dropout.
    #[serde(default)]
    pub ideal_sensors: bool,
    #[serde(default)]
    pub events: Vec<ScriptedEvent>,
}

fn default_dt() -> f64 {
    0.01
}

/// Menu used when a scenario names none.
pub fn default_menu() -> MenuModel {
    let item = |label: &str, action: &str| MenuItem { label: label.into(), action: action.into() };
    MenuModel::new(vec![
        item("Follow target", "mav_follow"),
        item("Hold depth", "depth_hold"),
        item("Arm motors", "arm"),
        item("Disarm motors", "disarm"),
    ])
    .expect("default menu is valid")
}

/// A scenario with every reference resolved and checked.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub vehicle: VehicleConfig,
    pub menu: MenuModel,
}

impl Scenario {
    pub fn from_json(document: &str) -> Result<Scenario, ScenarioError> {
        serde_json::from_str(document)
            .map_err(|e| ScenarioError::Parse { path: PathBuf::from("<inline>"), message: e.to_string() })
    }

    /// Reads, parses and resolves a scenario file.
    pub fn load(path: impl AsRef<Path>) -> Result<LoadedScenario, ScenarioError> {
        let path = path.as_ref();
        let text = read(path)?;
        let scenario: Scenario = serde_json::from_str(&text)
            .map_err(|e| ScenarioError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new("."));
        scenario.resolve(base)
    }

    /// Resolves file references against `base_dir` and validates.
    pub fn resolve(self, base_dir: &Path) -> Result<LoadedScenario, ScenarioError> {
        let vehicle = match &self.vehicle {
            Some(rel) => {
                let p = base_dir.join(rel);
                load_config(&read(&p)?).map_err(|e| config_error("vehicle", e))?
            }
            None => VehicleConfig::reference(),
        };
        let menu = match &self.menu {
            Some(rel) => {
                let p = base_dir.join(rel);
                MenuModel::from_json(&read(&p)?).map_err(|e| ScenarioError::invalid("menu", e))?
            }
            None => default_menu(),
        };
        self.finish(vehicle, menu)
    }

    /// Validates against an already loaded vehicle and menu.
    pub fn finish(self, vehicle: VehicleConfig, menu: MenuModel) -> Result<LoadedScenario, ScenarioError> {
        let mut vehicle = vehicle;
        let mut environment = self.environment.clone();
        if let Some(p) = &self.vehicle_patch {
            vehicle = apply_patch(&vehicle, &p.vehicle).map_err(|e| config_error("vehicle_patch", e))?;
            environment = apply_sets(&environment, &p.environment).map_err(|e| config_error("vehicle_patch", e))?;
        }
        if self.ideal_sensors {
            let s = &mut vehicle.sensors;
            s.ahrs.noise = AhrsNoise::none();
            s.depth.sigma = 0.0;
            s.camera.range_sigma = 0.0;
            s.camera.dropout = 0.0;
        }
        let mut scenario = self;
        scenario.environment = environment;
        scenario.validate(&vehicle)?;
        scenario.events.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(LoadedScenario { scenario, vehicle, menu })
    }

    fn validate(&self, vehicle: &VehicleConfig) -> Result<(), ScenarioError> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(ScenarioError::invalid("duration", "must be positive"));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(ScenarioError::invalid("dt", format!("must lie in (0, {MAX_DT}]")));
        }
        for (name, hz) in [
            ("rates.control_hz", self.rates.control_hz),
            ("rates.state_hz", self.rates.state_hz),
            ("rates.uhri_hz", self.rates.uhri_hz),
        ] {
            if !(hz.is_finite() && hz > 0.0) {
                return Err(ScenarioError::invalid(name, "must be positive"));
            }
        }
        self.environment.validate().map_err(|e| config_error("", e))?;
        self.follow.validate().map_err(|e| config_error("follow", e))?;
        let init = &self.initial_state;
        let finite = init.position.iter().chain(&init.velocity).chain(&init.angular_velocity).chain(&init.rpy);
        if !finite.into_iter().all(|v| v.is_finite()) {
            return Err(ScenarioError::invalid("initial_state", "must be finite"));
        }
        if let Some(TargetSpec::Waypoints(w)) = &self.target {
            if w.is_empty() {
                return Err(ScenarioError::invalid("target.waypoints", "needs at least one waypoint"));
            }
            for (i, p) in w.iter().enumerate() {
                if !p.t.is_finite() || (i > 0 && p.t <= w[i - 1].t) {
                    return Err(ScenarioError::invalid(format!("target.waypoints[{i}].t"), "must increase strictly"));
                }
            }
        }

        // Replay the scripted reconfigurations so bad references fail here
        // rather than mid-run.
        let mut config = vehicle.clone();
        let mut env = self.environment.clone();
        for (i, ev) in self.events.iter().enumerate() {
            let field = |f: &str| format!("events[{i}].{f}");
            if !(ev.t.is_finite() && ev.t >= 0.0 && ev.t <= self.duration) {
                return Err(ScenarioError::invalid(field("t"), "must lie within [0, duration]"));
            }
            match &ev.command {
                Command::Patch(p) => {
                    config = apply_patch(&config, &p.vehicle).map_err(|e| config_error(&field("vehicle"), e))?;
                    env = apply_sets(&env, &p.environment).map_err(|e| config_error(&field("environment"), e))?;
                    env.validate().map_err(|e| config_error(&format!("events[{i}]"), e))?;
                }
                Command::ThrusterFailure { thruster } | Command::ThrusterRestore { thruster } => {
                    if config.thruster_index(thruster).is_none() {
                        return Err(ScenarioError::invalid(field("thruster"), format!("unknown thruster `{thruster}`")));
                    }
                }
                Command::Start { action } if action.is_empty() => {
                    return Err(ScenarioError::invalid(field("action"), "must not be empty"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })
}
