use serde::{Deserialize, Serialize};

use super::PidGains;
use crate::geometry::wrap_angle;

/// PID with a clamped integral term and derivative on measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pid {
    pub gains: PidGains,
    integral: f64,
    derivative: f64,
    last_measurement: Option<f64>,
}

impl Pid {
    pub fn new(gains: PidGains) -> Self {
        Pid { gains, integral: 0.0, derivative: 0.0, last_measurement: None }
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.derivative = 0.0;
        self.last_measurement = None;
    }

    /// Integral contribution to the output, already clamped.
    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn step(&mut self, setpoint: f64, measurement: f64, dt: f64) -> f64 {
        let delta = self.last_measurement.map_or(0.0, |last| measurement - last);
        self.update(setpoint - measurement, measurement, delta, dt)
    }

    /// Like [`Pid::step`] for angles: error and measurement change are wrapped to (-π, π].
    pub fn step_angle(&mut self, setpoint: f64, measurement: f64, dt: f64) -> f64 {
        let delta = self.last_measurement.map_or(0.0, |last| wrap_angle(measurement - last));
        self.update(wrap_angle(setpoint - measurement), measurement, delta, dt)
    }

    fn update(&mut self, error: f64, measurement: f64, delta: f64, dt: f64) -> f64 {
        debug_assert!(dt > 0.0);
        let g = &self.gains;
        self.last_measurement = Some(measurement);

        self.integral = (self.integral + g.ki * error * dt).clamp(-g.integrator_limit, g.integrator_limit);

        let raw = -delta / dt;
        self.derivative = if g.derivative_filter > 0.0 {
            let alpha = dt / (g.derivative_filter + dt);
            self.derivative + alpha * (raw - self.derivative)
        } else {
            raw
        };

        let out = g.kp * error + self.integral + g.kd * self.derivative;
        out.clamp(-g.output_limit, g.output_limit)
    }
}
