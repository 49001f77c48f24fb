use serde::{Deserialize, Serialize};

use crate::vehicle::ThrusterSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwmCommand {
    /// Pulse width, µs.
    pub pulse: f64,
    /// The requested thrust was outside the thruster's range and was clamped.
    pub clamped: bool,
}

/// Piecewise-linear ESC map with a symmetric deadband around zero thrust.
pub fn thrust_to_pwm(spec: &ThrusterSpec, thrust: f64) -> PwmCommand {
    let clamped = !(thrust >= -spec.max_thrust_rev && thrust <= spec.max_thrust_fwd);
    let u = if thrust.is_nan() { 0.0 } else { thrust.clamp(-spec.max_thrust_rev, spec.max_thrust_fwd) };
    let pulse = if u.abs() <= spec.deadband {
        spec.pwm_neutral
    } else if u > 0.0 {
        spec.pwm_neutral + (spec.pwm_max - spec.pwm_neutral) * (u / spec.max_thrust_fwd)
    } else {
        spec.pwm_neutral + (spec.pwm_neutral - spec.pwm_min) * (u / spec.max_thrust_rev)
    };
    PwmCommand { pulse, clamped }
}
