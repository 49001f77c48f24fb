//! Target follower: proportional range and bearing control on detections.

use serde::{Deserialize, Serialize};

use crate::dynamics::Wrench;
use crate::geometry::Vec3;
use crate::sensors::TargetDetection;
use crate::vehicle::{ensure, ConfigError, RigidBodyParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FollowParams {
    /// Desired camera-to-target range, m.
    pub standoff: f64,
    /// Surge is clamped to the force that holds this speed against drag, m/s.
    pub max_speed: f64,
    /// Range error to surge force, N/m.
    pub surge_gain: f64,
    /// Range rate to surge force, N·s/m.
    pub surge_damping: f64,
    /// Horizontal bearing error to yaw torque, N·m/rad.
    pub yaw_gain: f64,
    /// Vertical bearing error to pitch torque, N·m/rad.
    pub pitch_gain: f64,
    /// Range errors smaller than this produce no surge, m.
    pub deadband: f64,
    /// Yaw torque used while searching for a lost target, N·m.
    pub search_torque: f64,
    /// After this long without a detection the follower stops, s.
    pub lost_timeout: f64,
}

impl Default for FollowParams {
    fn default() -> Self {
        FollowParams {
            standoff: 0.5,
            max_speed: 0.5,
            surge_gain: 3.0,
            surge_damping: 10.0,
            yaw_gain: 2.0,
            pitch_gain: 2.0,
            deadband: 0.05,
            search_torque: 0.5,
            lost_timeout: 5.0,
        }
    }
}

impl FollowParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        ensure(self.standoff > 0.0 && self.standoff.is_finite(), "follow.standoff", "must be positive")?;
        ensure(self.max_speed > 0.0 && self.max_speed.is_finite(), "follow.max_speed", "must be positive")?;
        ensure(self.lost_timeout >= 0.0, "follow.lost_timeout", "must be non-negative")?;
        ensure(self.deadband >= 0.0, "follow.deadband", "must be non-negative")?;
        for (name, v) in [
            ("surge_gain", self.surge_gain),
            ("surge_damping", self.surge_damping),
            ("yaw_gain", self.yaw_gain),
            ("pitch_gain", self.pitch_gain),
            ("search_torque", self.search_torque),
        ] {
            ensure(v.is_finite() && v >= 0.0, format!("follow.{name}"), "must be non-negative")?;
        }
        Ok(())
    }

    /// Surge force that balances drag at `max_speed`.
    pub fn max_surge_force(&self, body: &RigidBodyParams) -> f64 {
        let v = self.max_speed;
        body.linear_drag[0] * v + body.quadratic_drag[0] * v * v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FollowStatus {
    Tracking,
    /// Within the range deadband.
    Holding,
    Searching,
    Lost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MavOutput {
    pub wrench: Wrench,
    pub status: FollowStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MavFollower {
    pub params: FollowParams,
    max_force: f64,
    since_seen: f64,
    last_range: Option<f64>,
    range_rate: f64,
    search_sign: f64,
}

impl MavFollower {
    pub fn new(params: FollowParams, body: &RigidBodyParams) -> Self {
        MavFollower {
            params,
            max_force: params.max_surge_force(body),
            since_seen: f64::INFINITY,
            last_range: None,
            range_rate: 0.0,
            search_sign: 1.0,
        }
    }

    pub fn reset(&mut self) {
        self.since_seen = f64::INFINITY;
        self.last_range = None;
        self.range_rate = 0.0;
    }

    /// Recomputes the surge limit after a reconfiguration, keeping track state.
    pub fn set_body(&mut self, body: &RigidBodyParams) {
        self.max_force = self.params.max_surge_force(body);
    }

    pub fn max_force(&self) -> f64 {
        self.max_force
    }

    /// One control tick. `dt` is the time since the previous call.
    pub fn step(&mut self, detection: Option<&TargetDetection>, dt: f64) -> MavOutput {
        let p = self.params;
        self.since_seen += dt;
        let Some(d) = detection else {
            self.last_range = None;
            if self.since_seen <= p.lost_timeout {
                let torque = Vec3::new(0.0, 0.0, self.search_sign * p.search_torque);
                return MavOutput { wrench: Wrench::new(Vec3::zeros(), torque), status: FollowStatus::Searching };
            }
            return MavOutput { wrench: Wrench::zero(), status: FollowStatus::Lost };
        };
        self.range_rate = match self.last_range {
            Some(last) if self.since_seen > 0.0 => (d.range - last) / self.since_seen,
            _ => 0.0,
        };
        self.last_range = Some(d.range);
        self.since_seen = 0.0;

        let b = d.bearing;
        let yaw_error = b.y.atan2(b.x);
        let pitch_error = (-b.z).atan2((b.x * b.x + b.y * b.y).sqrt());
        if yaw_error != 0.0 {
            self.search_sign = yaw_error.signum();
        }

        let error = d.range - p.standoff;
        let (surge, status) = if error.abs() < p.deadband {
            (0.0, FollowStatus::Holding)
        } else {
            let f = p.surge_gain * error + p.surge_damping * self.range_rate;
            (f.clamp(-self.max_force, self.max_force), FollowStatus::Tracking)
        };
        MavOutput {
            wrench: Wrench::new(
                Vec3::new(surge, 0.0, 0.0),
                Vec3::new(0.0, p.pitch_gain * pitch_error, p.yaw_gain * yaw_error),
            ),
            status,
        }
    }
}
