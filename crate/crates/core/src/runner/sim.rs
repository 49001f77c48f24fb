use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::command::{Command, SimPatch};
use super::scenario::{LoadedScenario, Scenario};
use crate::behaviors::{
    front_oled, hreye_render, side_oled, Behavior, FollowStatus, MavFollower, Mission, MissionEffect, MissionEvent,
};
use crate::bus::topics;
use crate::control::{
    allocate, build_allocation, flyby_mix, thrust_to_pwm, AllocationMatrix, Autopilot, AutopilotMode, PilotInput,
    Setpoints, StateEstimate, ThrustLimits,
};
use crate::dynamics::{self, BodyState, DynamicsError, ThrustVector, Wrench};
use crate::geometry::{euler, Vec3};
use crate::sensors::{
    battery_update, detect_target, estimate_pose, estimate_rates, load_current, sample_ahrs, sample_depth, BatteryState,
    TargetDetection,
};
use crate::vehicle::{apply_patch, apply_sets, EnvironmentConfig, VehicleConfig};

/// One outgoing bus message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub topic: String,
    pub timestamp_ns: u64,
    /// JSON text.
    pub payload: String,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("numeric blow-up at t = {time:.3} s; last finite state: {last}")]
    BlowUp { time: f64, last: String },
    #[error(transparent)]
    Dynamics(DynamicsError),
}

impl From<DynamicsError> for SimError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::NonFinite { time, last } => SimError::BlowUp {
                time,
                last: serde_json::to_string(&last).unwrap_or_else(|_| format!("{last:?}")),
            },
            other => SimError::Dynamics(other),
        }
    }
}

/// `/actuators/thrusters`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThrustersMessage {
    pub ids: Vec<String>,
    /// Commanded thrust after the arming gate, N.
    pub thrust: Vec<f64>,
    pub armed: bool,
    pub saturated: bool,
    /// Thrusters that have physically failed.
    pub failed: Vec<String>,
}

/// `/actuators/pwm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwmMessage {
    pub ids: Vec<String>,
    pub pulse_us: Vec<f64>,
}

/// `/sim/state`: ground truth plus the loop's mode flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStateMessage {
    pub truth: BodyState,
    pub depth: f64,
    pub rpy: [f64; 3],
    pub mode: AutopilotMode,
    pub behavior: Behavior,
    pub armed: bool,
    pub follow: Option<FollowStatus>,
    /// True camera-to-target range, m.
    pub target_range: Option<f64>,
    pub battery_fraction: f64,
    pub water_density: f64,
    pub controller_fault: bool,
}

/// `/sim/event`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimEvent {
    PatchApplied,
    PatchRejected { error: String },
    ThrusterFailed { thruster: String },
    ThrusterRestored { thruster: String },
    CommandRejected { error: String },
}

fn every(hz: f64, dt: f64) -> u64 {
    ((1.0 / (hz * dt)).round() as u64).max(1)
}

#[derive(Debug, Clone, Copy)]
struct Divisors {
    ahrs: u64,
    depth: u64,
    battery: u64,
    camera: u64,
    control: u64,
    state: u64,
    uhri: u64,
}

impl Divisors {
    fn new(config: &VehicleConfig, s: &Scenario) -> Self {
        let dt = s.dt;
        let sensors = &config.sensors;
        Divisors {
            ahrs: every(sensors.ahrs.rate_hz, dt),
            depth: every(sensors.depth.rate_hz, dt),
            battery: every(sensors.battery.rate_hz, dt),
            camera: every(sensors.camera.rate_hz, dt),
            control: every(s.rates.control_hz, dt),
            state: every(s.rates.state_hz, dt),
            uhri: every(s.rates.uhri_hz, dt),
        }
    }
}

/// Single-threaded owner of all simulation state.
///
/// Each [`tick`](Simulation::tick) applies due scripted events, samples
/// sensors, runs the behavior and control layers, and integrates one `dt`.
/// Output is queued and collected with [`drain`](Simulation::drain).
pub struct Simulation {
    scenario: Scenario,
    config: VehicleConfig,
    env: EnvironmentConfig,
    state: BodyState,
    accel: Vec3,
    rng: ChaCha8Rng,
    ticks: u64,
    total_ticks: u64,
    dt_ns: u64,
    next_event: usize,
    div: Divisors,

    matrix: AllocationMatrix,
    limits: ThrustLimits,
    autopilot: Autopilot,
    mode: AutopilotMode,
    setpoints: Setpoints,
    pilot: PilotInput,
    estimate: StateEstimate,
    controller_fault: bool,
    command: ThrustVector,
    failed: BTreeSet<String>,

    mission: Mission,
    follower: MavFollower,
    follow_status: Option<FollowStatus>,
    follow_wrench: Wrench,
    detection: Option<TargetDetection>,

    battery: BatteryState,

    outbox: Vec<Message>,
    last_front: String,
    last_mission: String,
}

impl Simulation {
    pub fn new(loaded: LoadedScenario) -> Self {
        let LoadedScenario { scenario, vehicle: config, menu } = loaded;
        let dt = scenario.dt;
        let div = Divisors::new(&config, &scenario);
        let matrix = build_allocation(&config);
        let limits = ThrustLimits::from_config(&config);
        let n = config.thrusters.len();
        let mut sim = Simulation {
            env: scenario.environment.clone(),
            state: scenario.initial_state.body_state(),
            accel: Vec3::zeros(),
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            ticks: 0,
            total_ticks: (scenario.duration / dt).round() as u64,
            dt_ns: (dt * 1e9).round() as u64,
            next_event: 0,
            div,
            matrix,
            limits,
            autopilot: Autopilot::new(&config.control.gains),
            mode: scenario.autopilot.mode,
            setpoints: scenario.autopilot.setpoints,
            pilot: PilotInput::default(),
            estimate: StateEstimate::default(),
            controller_fault: false,
            command: ThrustVector::zeros(n),
            failed: BTreeSet::new(),
            mission: Mission::new(menu),
            follower: MavFollower::new(scenario.follow, &config.body),
            follow_status: None,
            follow_wrench: Wrench::zero(),
            detection: None,
            battery: BatteryState::full(&config.battery),
            outbox: Vec::new(),
            last_front: String::new(),
            last_mission: String::new(),
            config,
            scenario,
        };
        sim.publish_mission();
        sim.emit(topics::OLED_SIDE, 0, &side_oled(&sim.mission.menu));
        if sim.scenario.armed {
            let _ = sim.apply(&Command::Arm);
        }
        sim
    }

    /// Loads a scenario file and builds a simulation, with optional overrides.
    pub fn from_path(
        path: impl AsRef<std::path::Path>,
        seed: Option<u64>,
        duration: Option<f64>,
    ) -> Result<Self, super::scenario::ScenarioError> {
        let mut loaded = Scenario::load(path)?;
        if let Some(s) = seed {
            loaded.scenario.seed = s;
        }
        if let Some(d) = duration {
            if !(d.is_finite() && d > 0.0) {
                return Err(super::scenario::ScenarioError::Invalid {
                    field: "duration".into(),
                    reason: "must be positive".into(),
                });
            }
            loaded.scenario.duration = d;
        }
        Ok(Simulation::new(loaded))
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn config(&self) -> &VehicleConfig {
        &self.config
    }

    pub fn environment(&self) -> &EnvironmentConfig {
        &self.env
    }

    pub fn state(&self) -> &BodyState {
        &self.state
    }

    pub fn mission(&self) -> &Mission {
        &self.mission
    }

    pub fn mode(&self) -> AutopilotMode {
        self.mode
    }

    pub fn estimate(&self) -> &StateEstimate {
        &self.estimate
    }

    /// Last gated thrust command, N.
    pub fn command(&self) -> &ThrustVector {
        &self.command
    }

    pub fn battery(&self) -> &BatteryState {
        &self.battery
    }

    pub fn follow_status(&self) -> Option<FollowStatus> {
        self.follow_status
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn time(&self) -> f64 {
        self.ticks as f64 * self.scenario.dt
    }

    pub fn timestamp_ns(&self) -> u64 {
        self.ticks * self.dt_ns
    }

    pub fn is_finished(&self) -> bool {
        self.ticks >= self.total_ticks
    }

    /// Depth of the body origin below the still-water surface.
    pub fn depth(&self) -> f64 {
        self.state.position.z - self.env.surface_z
    }

    /// True camera-to-target range.
    pub fn target_range(&self) -> Option<f64> {
        let target = self.scenario.target.as_ref()?.position(self.time());
        let cam = self.state.position + self.state.orientation * self.config.sensors.camera.actual_mount.translation;
        Some((target - cam).norm())
    }

    pub fn drain(&mut self) -> std::vec::Drain<'_, Message> {
        self.outbox.drain(..)
    }

    fn emit<T: Serialize>(&mut self, topic: &str, timestamp_ns: u64, payload: &T) {
        let payload = serde_json::to_string(payload).expect("bus payloads serialize");
        self.outbox.push(Message { topic: topic.to_string(), timestamp_ns, payload });
    }

    fn event(&mut self, e: SimEvent) {
        self.emit(topics::SIM_EVENT, self.timestamp_ns(), &e);
    }

    fn publish_mission(&mut self) {
        let ts = self.timestamp_ns();
        let snap = serde_json::to_string(&self.mission.snapshot()).expect("snapshot serializes");
        if snap != self.last_mission {
            self.outbox.push(Message { topic: topics::MISSION.into(), timestamp_ns: ts, payload: snap.clone() });
            self.last_mission = snap;
        }
        let front = front_oled(self.mission.behavior().state_name(), self.mission.armed(), self.battery.fraction());
        let front = serde_json::to_string(&front).expect("oled serializes");
        if front != self.last_front {
            self.outbox.push(Message { topic: topics::OLED_FRONT.into(), timestamp_ns: ts, payload: front.clone() });
            self.last_front = front;
        }
    }

    fn mission_event(&mut self, e: MissionEvent) {
        let ts = self.timestamp_ns();
        for fx in self.mission.handle(&e) {
            match fx {
                MissionEffect::Armed(true) => self.autopilot.reset(),
                MissionEffect::Armed(false) => {}
                MissionEffect::Behavior(b) => {
                    self.follower.reset();
                    self.follow_wrench = Wrench::zero();
                    self.follow_status = (b == Behavior::MavFollow).then_some(FollowStatus::Searching);
                }
                MissionEffect::Menu => {
                    let side = side_oled(&self.mission.menu);
                    self.emit(topics::OLED_SIDE, ts, &side);
                }
                MissionEffect::Siren(s) => self.emit(topics::SIREN, ts, &s),
                MissionEffect::Hreye(p) => {
                    let h = hreye_render(&p, self.time());
                    self.emit(topics::HREYE, ts, &h);
                }
            }
        }
        self.publish_mission();
    }

    /// Decodes a bus message with [`Command::from_bus`] and applies it.
    pub fn apply_bus(&mut self, topic: &str, payload: &[u8]) -> Result<(), String> {
        match Command::from_bus(topic, payload) {
            Ok(c) => self.apply(&c),
            Err(e) => {
                let error = e.to_string();
                self.event(SimEvent::CommandRejected { error: error.clone() });
                Err(error)
            }
        }
    }

    /// Applies an input between integrator steps. Rejections are reported on
    /// `/sim/event` and returned.
    pub fn apply(&mut self, command: &Command) -> Result<(), String> {
        match command {
            Command::Token { token, .. } => self.mission_event(MissionEvent::Token(*token)),
            Command::Arm => self.mission_event(MissionEvent::Arm),
            Command::Disarm => self.mission_event(MissionEvent::Disarm),
            Command::Start { action } => self.mission_event(MissionEvent::Start(action.clone())),
            Command::Stop => self.mission_event(MissionEvent::Stop),
            Command::Pilot(p) => self.pilot = *p,
            Command::Setpoint(s) => self.setpoints = *s,
            Command::Mode { mode } => self.mode = *mode,
            Command::Patch(p) => return self.reconfigure(p),
            Command::ThrusterFailure { thruster } | Command::ThrusterRestore { thruster } => {
                if self.config.thruster_index(thruster).is_none() {
                    let error = format!("unknown thruster `{thruster}`");
                    self.event(SimEvent::CommandRejected { error: error.clone() });
                    return Err(error);
                }
                let thruster = thruster.clone();
                if matches!(command, Command::ThrusterFailure { .. }) {
                    self.failed.insert(thruster.clone());
                    self.event(SimEvent::ThrusterFailed { thruster });
                } else {
                    self.failed.remove(&thruster);
                    self.event(SimEvent::ThrusterRestored { thruster });
                }
            }
        }
        Ok(())
    }

    /// Swaps in a patched vehicle and environment. Controller state carries
    /// over; only derived matrices are rebuilt.
    fn reconfigure(&mut self, patch: &SimPatch) -> Result<(), String> {
        let result = apply_patch(&self.config, &patch.vehicle).and_then(|c| {
            let env = apply_sets(&self.env, &patch.environment)?;
            env.validate()?;
            Ok((c, env))
        });
        match result {
            Ok((config, env)) => {
                self.matrix = build_allocation(&config);
                self.limits = ThrustLimits::from_config(&config);
                self.autopilot.set_gains(&config.control.gains);
                self.follower.set_body(&config.body);
                self.failed.retain(|id| config.thruster_index(id).is_some());
                self.battery.capacity_wh = config.battery.capacity_wh;
                self.battery.remaining_wh = self.battery.remaining_wh.min(config.battery.capacity_wh);
                self.battery.nominal_voltage = config.battery.nominal_voltage;
                self.command = ThrustVector::zeros(config.thrusters.len());
                self.div = Divisors::new(&config, &self.scenario);
                self.config = config;
                self.env = env;
                self.event(SimEvent::PatchApplied);
                Ok(())
            }
            Err(e) => {
                let error = e.to_string();
                self.event(SimEvent::PatchRejected { error: error.clone() });
                Err(error)
            }
        }
    }

    fn apply_due_events(&mut self) {
        let now = self.time();
        let eps = 1e-6 * self.scenario.dt;
        while let Some(ev) = self.scenario.events.get(self.next_event) {
            if ev.t > now + eps {
                break;
            }
            let command = ev.command.clone();
            self.next_event += 1;
            let (topic, payload) = command.to_bus(now);
            self.outbox.push(Message { topic: topic.into(), timestamp_ns: self.timestamp_ns(), payload });
            let _ = self.apply(&command);
        }
    }

    fn sample_sensors(&mut self) {
        let k = self.ticks;
        let ts = self.timestamp_ns();
        let s = self.config.sensors.clone();
        if k % self.div.ahrs == 0 {
            let r = sample_ahrs(&self.state, &self.accel, self.env.gravity, &s.ahrs.actual_mount, &s.ahrs.noise, &mut self.rng);
            self.estimate.orientation = Some(estimate_pose(&r, &s.ahrs.believed_mount));
            self.estimate.angular_velocity = Some(estimate_rates(&r, &s.ahrs.believed_mount));
            self.emit(topics::AHRS, ts, &r);
        }
        if k % self.div.depth == 0 {
            let r = sample_depth(&self.state, &self.env, &s.depth.mount, s.depth.sigma, &mut self.rng);
            self.estimate.depth = Some(r.depth);
            self.emit(topics::DEPTH, ts, &r);
        }
        if k % self.div.battery == 0 {
            let b = self.battery;
            self.emit(topics::BATTERY, ts, &b);
        }
        if k % self.div.camera == 0 {
            self.detection = match &self.scenario.target {
                Some(target) => {
                    let p = target.position(self.time());
                    detect_target(&self.state, &p, &s.camera.actual_mount, &s.camera.detector_params(), &mut self.rng)
                }
                None => None,
            };
            let d = self.detection;
            self.emit(topics::TARGET, ts, &d);
            if self.mission.behavior() == Behavior::MavFollow {
                let out = self.follower.step(self.detection.as_ref(), self.div.camera as f64 * self.scenario.dt);
                self.follow_wrench = out.wrench;
                self.follow_status = Some(out.status);
            }
        }
    }

    fn control(&mut self) {
        let ts = self.timestamp_ns();
        let (mode, feedthrough) = match self.mission.behavior() {
            Behavior::MavFollow => (AutopilotMode::Follow, self.follow_wrench),
            Behavior::DepthHold => (AutopilotMode::DepthHold, flyby_mix(&self.pilot, &self.config.control.axis_scale)),
            Behavior::Idle => (self.mode, flyby_mix(&self.pilot, &self.config.control.axis_scale)),
        };
        let period = self.div.control as f64 * self.scenario.dt;
        let out = self.autopilot.step(mode, &self.estimate, &self.setpoints, &feedthrough, period);
        self.controller_fault = out.fault;
        let alloc = allocate(&self.matrix, &out.wrench, &self.limits);
        let saturated = alloc.saturated();
        self.command = self.mission.gate(alloc.thrusts);

        let ids: Vec<String> = self.config.thrusters.iter().map(|t| t.id.clone()).collect();
        let pulse_us = self
            .config
            .thrusters
            .iter()
            .zip(self.command.as_slice())
            .map(|(spec, &u)| thrust_to_pwm(spec, u).pulse)
            .collect();
        let msg = ThrustersMessage {
            ids: ids.clone(),
            thrust: self.command.0.clone(),
            armed: self.mission.armed(),
            saturated,
            failed: self.failed.iter().cloned().collect(),
        };
        self.emit(topics::THRUSTERS, ts, &msg);
        self.emit(topics::PWM, ts, &PwmMessage { ids, pulse_us });
    }

    /// Thrust actually produced: the command with failed thrusters silent.
    fn physical_thrust(&self) -> ThrustVector {
        let mut u = self.command.clone();
        for (i, spec) in self.config.thrusters.iter().enumerate() {
            if self.failed.contains(&spec.id) {
                u.0[i] = 0.0;
            }
        }
        u
    }

    pub fn tick(&mut self) -> Result<(), SimError> {
        let dt = self.scenario.dt;
        self.apply_due_events();
        self.sample_sensors();
        if self.ticks % self.div.control == 0 {
            self.control();
        }

        let physical = self.physical_thrust();
        let max_fwd: Vec<f64> = self.config.thrusters.iter().map(|t| t.max_thrust_fwd).collect();
        let heavy = self.mission.behavior() == Behavior::MavFollow;
        let current = load_current(&self.config.battery, physical.as_slice(), &max_fwd, heavy);
        self.battery = battery_update(&self.battery, current, dt);

        let mut next = dynamics::step(&self.state, &self.config, &self.env, &physical, dt)?;
        self.ticks += 1;
        next.time = self.time();
        self.accel = (next.velocity - self.state.velocity) / dt;
        self.state = next;

        let ts = self.timestamp_ns();
        if self.ticks % self.div.state == 0 {
            let (r, p, y) = euler(&self.state.orientation);
            let msg = SimStateMessage {
                truth: self.state,
                depth: self.depth(),
                rpy: [r, p, y],
                mode: self.mode,
                behavior: self.mission.behavior(),
                armed: self.mission.armed(),
                follow: self.follow_status,
                target_range: self.target_range(),
                battery_fraction: self.battery.fraction(),
                water_density: self.env.water_density,
                controller_fault: self.controller_fault,
            };
            self.emit(topics::SIM_STATE, ts, &msg);
        }
        if self.ticks % self.div.uhri == 0 {
            let h = hreye_render(self.mission.hreye_pattern(), self.time());
            self.emit(topics::HREYE, ts, &h);
            self.publish_mission();
        }
        Ok(())
    }

    /// Runs to the scenario duration, handing each tick's messages to `sink`.
    pub fn run<E>(&mut self, mut sink: impl FnMut(Message) -> Result<(), E>) -> Result<(), RunLoopError<E>> {
        while !self.is_finished() {
            let step = self.tick();
            for m in self.outbox.drain(..) {
                sink(m).map_err(RunLoopError::Sink)?;
            }
            step.map_err(RunLoopError::Sim)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RunLoopError<E> {
    #[error(transparent)]
    Sim(SimError),
    #[error("output: {0}")]
    Sink(E),
}

impl Simulation {
    /// Convenience for tests: a scenario document against the reference
    /// vehicle and default menu.
    pub fn from_json(document: &str) -> Result<Self, super::scenario::ScenarioError> {
        let s = Scenario::from_json(document)?;
        Ok(Simulation::new(s.resolve(std::path::Path::new("."))?))
    }
}
