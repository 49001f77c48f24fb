//! Pilot and autopilot intent to per-thruster commands.

mod allocation;
mod autopilot;
mod pid;
mod pwm;

pub use allocation::{allocate, build_allocation, Allocation, AllocationMatrix, ThrustLimits, RANK_TOLERANCE};
pub use autopilot::{Autopilot, AutopilotMode, AutopilotOutput, Setpoints, StateEstimate};
pub use pid::Pid;
pub use pwm::{thrust_to_pwm, PwmCommand};

use serde::{Deserialize, Serialize};

use crate::dynamics::Wrench;
use crate::geometry::Vec3;
use crate::vehicle::{ensure, ConfigError};

/// One PID loop. Limits are in output units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Bound on the integral term's contribution to the output.
    pub integrator_limit: f64,
    pub output_limit: f64,
    /// First-order low-pass time constant on the derivative term, s. Zero disables it.
    #[serde(default)]
    pub derivative_filter: f64,
}

impl PidGains {
    pub fn new(kp: f64, ki: f64, kd: f64, integrator_limit: f64, output_limit: f64) -> Self {
        PidGains { kp, ki, kd, integrator_limit, output_limit, derivative_filter: 0.0 }
    }

    fn validate(&self, path: &str) -> Result<(), ConfigError> {
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd), ("derivative_filter", self.derivative_filter)] {
            ensure(v.is_finite() && v >= 0.0, format!("{path}.{name}"), "must be finite and non-negative")?;
        }
        ensure(
            self.integrator_limit.is_finite() && self.integrator_limit > 0.0,
            format!("{path}.integrator_limit"),
            "must be positive",
        )?;
        ensure(
            self.output_limit.is_finite() && self.output_limit > 0.0,
            format!("{path}.output_limit"),
            "must be positive",
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerGains {
    /// Depth error (m) to world-vertical force (N).
    pub depth: PidGains,
    /// Roll error (rad) to torque (N·m).
    pub roll: PidGains,
    pub pitch: PidGains,
    /// Yaw-rate error (rad/s) to torque (N·m).
    pub yaw_rate: PidGains,
}

impl Default for ControllerGains {
    fn default() -> Self {
        ControllerGains {
            depth: PidGains { derivative_filter: 0.05, ..PidGains::new(60.0, 6.0, 40.0, 15.0, 60.0) },
            roll: PidGains { derivative_filter: 0.02, ..PidGains::new(10.0, 1.0, 3.0, 2.0, 8.0) },
            pitch: PidGains { derivative_filter: 0.02, ..PidGains::new(10.0, 1.0, 3.0, 2.0, 8.0) },
            yaw_rate: PidGains::new(6.0, 1.0, 0.0, 2.0, 10.0),
        }
    }
}

/// Maximum wrench per pilot axis at full stick deflection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisScale {
    pub surge: f64,
    pub sway: f64,
    pub heave: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Default for AxisScale {
    fn default() -> Self {
        AxisScale { surge: 40.0, sway: 20.0, heave: 40.0, roll: 5.0, pitch: 3.0, yaw: 8.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationScheme {
    /// Moore–Penrose pseudo-inverse with uniform saturation scaling.
    #[default]
    PseudoInverse,
}

/// The `control` block of a vehicle document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlConfig {
    #[serde(default)]
    pub gains: ControllerGains,
    #[serde(default)]
    pub axis_scale: AxisScale,
    #[serde(default)]
    pub allocation: AllocationScheme,
}

impl ControlConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.gains.depth.validate("control.gains.depth")?;
        self.gains.roll.validate("control.gains.roll")?;
        self.gains.pitch.validate("control.gains.pitch")?;
        self.gains.yaw_rate.validate("control.gains.yaw_rate")?;
        let s = &self.axis_scale;
        for (name, v) in [
            ("surge", s.surge),
            ("sway", s.sway),
            ("heave", s.heave),
            ("roll", s.roll),
            ("pitch", s.pitch),
            ("yaw", s.yaw),
        ] {
            ensure(v.is_finite() && v >= 0.0, format!("control.axis_scale.{name}"), "must be non-negative")?;
        }
        Ok(())
    }
}

/// Normalised stick input, each axis in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PilotInput {
    #[serde(default)]
    pub surge: f64,
    #[serde(default)]
    pub sway: f64,
    #[serde(default)]
    pub heave: f64,
    #[serde(default)]
    pub roll: f64,
    #[serde(default)]
    pub pitch: f64,
    #[serde(default)]
    pub yaw: f64,
    #[serde(default)]
    pub armed: bool,
}

impl PilotInput {
    /// Copy with every axis clamped to [-1, 1]; NaN becomes 0.
    pub fn clamped(&self) -> Self {
        let c = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
        PilotInput {
            surge: c(self.surge),
            sway: c(self.sway),
            heave: c(self.heave),
            roll: c(self.roll),
            pitch: c(self.pitch),
            yaw: c(self.yaw),
            armed: self.armed,
        }
    }
}

/// Fly-by-wire mixing of stick axes into a body wrench.
pub fn flyby_mix(input: &PilotInput, scale: &AxisScale) -> Wrench {
    if !input.armed {
        return Wrench::zero();
    }
    let i = input.clamped();
    Wrench::new(
        Vec3::new(i.surge * scale.surge, i.sway * scale.sway, i.heave * scale.heave),
        Vec3::new(i.roll * scale.roll, i.pitch * scale.pitch, i.yaw * scale.yaw),
    )
}
