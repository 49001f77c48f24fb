use serde::{Deserialize, Serialize};

use super::{ControllerGains, Pid};
use crate::dynamics::Wrench;
use crate::geometry::{euler, quat_wxyz_opt, Quat, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutopilotMode {
    /// Feedthrough wrench only.
    #[default]
    Manual,
    /// Roll, pitch and yaw-rate hold; forces fed through.
    Stabilize,
    /// Stabilize plus depth hold on the vertical axis.
    DepthHold,
    /// Roll hold with the feedthrough (a behavior's wrench) on every other axis.
    Follow,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Setpoints {
    /// m below the surface datum.
    #[serde(default)]
    pub depth: f64,
    #[serde(default)]
    pub roll: f64,
    #[serde(default)]
    pub pitch: f64,
    #[serde(default)]
    pub yaw_rate: f64,
}

/// What the controller believes about the vehicle. Fields may be missing
/// before the first sensor sample arrives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateEstimate {
    #[serde(default, with = "quat_wxyz_opt")]
    pub orientation: Option<Quat>,
    #[serde(default)]
    pub angular_velocity: Option<Vec3>,
    #[serde(default)]
    pub depth: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutopilotOutput {
    pub wrench: Wrench,
    /// The estimate lacked a field the mode needs; the wrench is zero.
    pub fault: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Autopilot {
    depth: Pid,
    roll: Pid,
    pitch: Pid,
    yaw_rate: Pid,
    last_mode: AutopilotMode,
}

impl Autopilot {
    pub fn new(gains: &ControllerGains) -> Self {
        Autopilot {
            depth: Pid::new(gains.depth),
            roll: Pid::new(gains.roll),
            pitch: Pid::new(gains.pitch),
            yaw_rate: Pid::new(gains.yaw_rate),
            last_mode: AutopilotMode::Manual,
        }
    }

    /// Swaps in new gains, keeping integrator state.
    pub fn set_gains(&mut self, gains: &ControllerGains) {
        self.depth.gains = gains.depth;
        self.roll.gains = gains.roll;
        self.pitch.gains = gains.pitch;
        self.yaw_rate.gains = gains.yaw_rate;
    }

    pub fn reset(&mut self) {
        self.depth.reset();
        self.roll.reset();
        self.pitch.reset();
        self.yaw_rate.reset();
    }

    pub fn step(
        &mut self,
        mode: AutopilotMode,
        estimate: &StateEstimate,
        setpoints: &Setpoints,
        feedthrough: &Wrench,
        dt: f64,
    ) -> AutopilotOutput {
        if mode != self.last_mode {
            self.reset();
            self.last_mode = mode;
        }
        if mode == AutopilotMode::Manual {
            return AutopilotOutput { wrench: *feedthrough, fault: false };
        }
        let needs_rates = matches!(mode, AutopilotMode::Stabilize | AutopilotMode::DepthHold);
        let needs_depth = mode == AutopilotMode::DepthHold;
        let (Some(q), Some(omega)) = (
            estimate.orientation,
            estimate.angular_velocity.or(if needs_rates { None } else { Some(Vec3::zeros()) }),
        ) else {
            return fault();
        };
        if needs_depth && estimate.depth.is_none() {
            return fault();
        }

        let (roll, pitch, _) = euler(&q);
        let mut w = *feedthrough;
        w.torque.x = self.roll.step_angle(setpoints.roll, roll, dt);

        if mode == AutopilotMode::Follow {
            return AutopilotOutput { wrench: w, fault: false };
        }

        w.torque.y = self.pitch.step_angle(setpoints.pitch, pitch, dt);
        w.torque.z = feedthrough.torque.z + self.yaw_rate.step(setpoints.yaw_rate, omega.z, dt);

        if let (AutopilotMode::DepthHold, Some(depth)) = (mode, estimate.depth) {
            // Positive output pushes the vehicle down (world z is down).
            let vertical = -self.depth.step(setpoints.depth, depth, dt);
            let body = q.inverse() * Vec3::new(0.0, 0.0, -vertical);
            w.force = Vec3::new(feedthrough.force.x, feedthrough.force.y, 0.0) + body;
        }
        AutopilotOutput { wrench: w, fault: false }
    }
}

fn fault() -> AutopilotOutput {
    AutopilotOutput { wrench: Wrench::zero(), fault: true }
}
