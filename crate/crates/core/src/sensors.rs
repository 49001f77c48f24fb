//! Simulated sensors with decoupled mounting uncertainty.
//!
//! Every sensor carries two mounts: the *actual* one, used to generate
//! readings from ground truth, and the *believed* one, used by consumers to
//! interpret those readings. Misalignment is the difference between the two
//! and never feeds back into the simulated truth.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::BodyState;
use crate::geometry::{quat_wxyz, Quat, Vec3};
use crate::vehicle::{ensure, ensure_finite_vec, BatteryConfig, ConfigError, EnvironmentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MountTransform {
    pub translation: Vec3,
    /// body←sensor rotation.
    #[serde(with = "quat_wxyz")]
    pub rotation: Quat,
}

impl Default for MountTransform {
    fn default() -> Self {
        MountTransform { translation: Vec3::zeros(), rotation: Quat::identity() }
    }
}

impl MountTransform {
    pub fn new(translation: Vec3, rotation: Quat) -> Self {
        MountTransform { translation, rotation }
    }

    fn validate(&self, path: &str) -> Result<(), ConfigError> {
        ensure_finite_vec(&self.translation, format!("{path}.translation"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AhrsNoise {
    /// Per-axis small-angle orientation noise, rad.
    pub orientation_sigma: f64,
    pub rate_sigma: f64,
    pub rate_bias: Vec3,
    pub accel_sigma: f64,
    pub accel_bias: Vec3,
}

impl Default for AhrsNoise {
    fn default() -> Self {
        AhrsNoise {
            orientation_sigma: 0.5_f64.to_radians(),
            rate_sigma: 0.02,
            rate_bias: Vec3::zeros(),
            accel_sigma: 0.05,
            accel_bias: Vec3::zeros(),
        }
    }
}

impl AhrsNoise {
    pub fn none() -> Self {
        AhrsNoise {
            orientation_sigma: 0.0,
            rate_sigma: 0.0,
            rate_bias: Vec3::zeros(),
            accel_sigma: 0.0,
            accel_bias: Vec3::zeros(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AhrsConfig {
    pub actual_mount: MountTransform,
    pub believed_mount: MountTransform,
    #[serde(default)]
    pub noise: AhrsNoise,
    #[serde(default = "AhrsConfig::default_rate")]
    pub rate_hz: f64,
}

impl AhrsConfig {
    fn default_rate() -> f64 {
        100.0
    }
}

impl Default for AhrsConfig {
    fn default() -> Self {
        AhrsConfig {
            actual_mount: MountTransform::default(),
            believed_mount: MountTransform::default(),
            noise: AhrsNoise::default(),
            rate_hz: Self::default_rate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthConfig {
    #[serde(default)]
    pub mount: MountTransform,
    pub sigma: f64,
    #[serde(default = "DepthConfig::default_rate")]
    pub rate_hz: f64,
}

impl DepthConfig {
    fn default_rate() -> f64 {
        20.0
    }
}

impl Default for DepthConfig {
    fn default() -> Self {
        DepthConfig { mount: MountTransform::default(), sigma: 0.01, rate_hz: Self::default_rate() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryMonitorConfig {
    pub rate_hz: f64,
}

impl Default for BatteryMonitorConfig {
    fn default() -> Self {
        BatteryMonitorConfig { rate_hz: 1.0 }
    }
}

/// Idealised target detector standing in for the colour-threshold pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    pub actual_mount: MountTransform,
    pub believed_mount: MountTransform,
    /// Full field of view, rad; targets beyond half of it off-axis are culled.
    pub fov: f64,
    pub max_range: f64,
    pub range_sigma: f64,
    /// Probability that a visible target is missed.
    pub dropout: f64,
    #[serde(default = "CameraConfig::default_rate")]
    pub rate_hz: f64,
}

impl CameraConfig {
    fn default_rate() -> f64 {
        10.0
    }

    pub fn detector_params(&self) -> DetectorParams {
        DetectorParams {
            fov: self.fov,
            max_range: self.max_range,
            range_sigma: self.range_sigma,
            dropout: self.dropout,
        }
    }
}

impl Default for CameraConfig {
    fn default() -> Self {
        let front = MountTransform::new(Vec3::new(0.4, 0.0, 0.0), Quat::identity());
        CameraConfig {
            actual_mount: front,
            believed_mount: front,
            fov: std::f64::consts::FRAC_PI_2,
            max_range: 8.0,
            range_sigma: 0.02,
            dropout: 0.0,
            rate_hz: Self::default_rate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SensorsConfig {
    #[serde(default)]
    pub ahrs: AhrsConfig,
    #[serde(default)]
    pub depth: DepthConfig,
    #[serde(default)]
    pub battery: BatteryMonitorConfig,
    #[serde(default)]
    pub camera: CameraConfig,
}

impl SensorsConfig {
    pub(crate) fn validate(&self) -> Result<(), ConfigError> {
        let a = &self.ahrs;
        a.actual_mount.validate("sensors.ahrs.actual_mount")?;
        a.believed_mount.validate("sensors.ahrs.believed_mount")?;
        ensure(a.rate_hz > 0.0, "sensors.ahrs.rate_hz", "must be positive")?;
        let n = &a.noise;
        ensure(
            n.orientation_sigma >= 0.0 && n.rate_sigma >= 0.0 && n.accel_sigma >= 0.0,
            "sensors.ahrs.noise",
            "standard deviations must be non-negative",
        )?;
        ensure_finite_vec(&n.rate_bias, "sensors.ahrs.noise.rate_bias")?;
        ensure_finite_vec(&n.accel_bias, "sensors.ahrs.noise.accel_bias")?;
        self.depth.mount.validate("sensors.depth.mount")?;
        ensure(self.depth.sigma >= 0.0, "sensors.depth.sigma", "must be non-negative")?;
        ensure(self.depth.rate_hz > 0.0, "sensors.depth.rate_hz", "must be positive")?;
        ensure(self.battery.rate_hz > 0.0, "sensors.battery.rate_hz", "must be positive")?;
        let c = &self.camera;
        c.actual_mount.validate("sensors.camera.actual_mount")?;
        c.believed_mount.validate("sensors.camera.believed_mount")?;
        ensure(
            c.fov > 0.0 && c.fov <= std::f64::consts::TAU,
            "sensors.camera.fov",
            "must lie in (0, 2π]",
        )?;
        ensure(c.max_range > 0.0, "sensors.camera.max_range", "must be positive")?;
        ensure(c.range_sigma >= 0.0, "sensors.camera.range_sigma", "must be non-negative")?;
        ensure((0.0..=1.0).contains(&c.dropout), "sensors.camera.dropout", "must lie in [0, 1]")?;
        ensure(c.rate_hz > 0.0, "sensors.camera.rate_hz", "must be positive")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AhrsReading {
    /// world←sensor.
    #[serde(with = "quat_wxyz")]
    pub orientation: Quat,
    pub angular_velocity: Vec3,
    pub linear_acceleration: Vec3,
    pub timestamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthReading {
    pub depth: f64,
    pub timestamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub capacity_wh: f64,
    pub remaining_wh: f64,
    pub nominal_voltage: f64,
    pub load_current: f64,
}

impl BatteryState {
    pub fn full(cfg: &BatteryConfig) -> Self {
        BatteryState {
            capacity_wh: cfg.capacity_wh,
            remaining_wh: cfg.capacity_wh,
            nominal_voltage: cfg.nominal_voltage,
            load_current: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.remaining_wh <= 0.0
    }

    pub fn fraction(&self) -> f64 {
        self.remaining_wh / self.capacity_wh
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetDetection {
    /// Unit vector toward the target, camera frame (x along the optical axis).
    pub bearing: Vec3,
    pub range: f64,
    pub confidence: f64,
    pub timestamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub fov: f64,
    pub max_range: f64,
    pub range_sigma: f64,
    pub dropout: f64,
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * sigma
}

fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Vec3 {
    Vec3::new(gaussian(rng, sigma), gaussian(rng, sigma), gaussian(rng, sigma))
}

/// Samples the AHRS from ground truth through its actual mount.
///
/// `body_acceleration` is the body-frame linear acceleration of the body
/// origin; gravity is added here so a vehicle at rest reads -g along world up.
pub fn sample_ahrs<R: Rng + ?Sized>(
    truth: &BodyState,
    body_acceleration: &Vec3,
    gravity: f64,
    actual_mount: &MountTransform,
    noise: &AhrsNoise,
    rng: &mut R,
) -> AhrsReading {
    let sensor_to_body = actual_mount.rotation;
    let body_to_sensor = sensor_to_body.inverse();

    // Draw order is fixed so readings depend only on (truth, params, seed).
    let tilt = gaussian_vec(rng, noise.orientation_sigma);
    let rate_noise = gaussian_vec(rng, noise.rate_sigma);
    let accel_noise = gaussian_vec(rng, noise.accel_sigma);

    let orientation = truth.orientation * sensor_to_body * Quat::from_scaled_axis(tilt);

    let omega = truth.angular_velocity;
    let angular_velocity = body_to_sensor * omega + noise.rate_bias + rate_noise;

    let lever = actual_mount.translation;
    let centripetal = omega.cross(&omega.cross(&lever));
    let gravity_body = truth.orientation.inverse() * Vec3::new(0.0, 0.0, gravity);
    let specific_force = body_acceleration + centripetal - gravity_body;
    let linear_acceleration = body_to_sensor * specific_force + noise.accel_bias + accel_noise;

    AhrsReading { orientation, angular_velocity, linear_acceleration, timestamp: truth.time }
}

/// Body orientation implied by a reading under the believed mount.
pub fn estimate_pose(reading: &AhrsReading, believed_mount: &MountTransform) -> Quat {
    reading.orientation * believed_mount.rotation.inverse()
}

/// Body-frame angular velocity implied by a reading under the believed mount.
pub fn estimate_rates(reading: &AhrsReading, believed_mount: &MountTransform) -> Vec3 {
    believed_mount.rotation * reading.angular_velocity
}

pub fn sample_depth<R: Rng + ?Sized>(
    truth: &BodyState,
    env: &EnvironmentConfig,
    mount: &MountTransform,
    sigma: f64,
    rng: &mut R,
) -> DepthReading {
    let sensor_z = truth.position.z + (truth.orientation * mount.translation).z;
    let noise = gaussian(rng, sigma);
    DepthReading { depth: sensor_z - env.surface_z + noise, timestamp: truth.time }
}

/// Drains `load_current` amps at the nominal voltage for `dt` seconds.
pub fn battery_update(state: &BatteryState, load_current: f64, dt: f64) -> BatteryState {
    let used_wh = state.nominal_voltage * load_current * dt / 3600.0;
    BatteryState {
        remaining_wh: (state.remaining_wh - used_wh).max(0.0),
        load_current,
        ..*state
    }
}

/// Electrical load for a set of thrust commands.
pub fn load_current(cfg: &BatteryConfig, thrusts: &[f64], max_fwd: &[f64], heavy_compute: bool) -> f64 {
    let motors: f64 = thrusts
        .iter()
        .zip(max_fwd)
        .map(|(u, max)| cfg.thruster_full_current * (u.abs() / max).min(1.0))
        .sum();
    cfg.idle_current + if heavy_compute { cfg.compute_current } else { 0.0 } + motors
}

/// Detects a world-frame target point from the camera on its actual mount.
pub fn detect_target<R: Rng + ?Sized>(
    truth: &BodyState,
    target: &Vec3,
    mount: &MountTransform,
    params: &DetectorParams,
    rng: &mut R,
) -> Option<TargetDetection> {
    // Both draws happen every call so the stream does not depend on visibility.
    let dropped = rng.random::<f64>() < params.dropout;
    let range_noise = gaussian(rng, params.range_sigma);

    let camera_world = truth.position + truth.orientation * mount.translation;
    let world_to_camera = (truth.orientation * mount.rotation).inverse();
    let rel = world_to_camera * (target - camera_world);
    let range = rel.norm();
    if dropped || range <= 0.0 || range > params.max_range {
        return None;
    }
    let bearing = rel / range;
    let off_axis = bearing.x.clamp(-1.0, 1.0).acos();
    if off_axis > 0.5 * params.fov {
        return None;
    }
    Some(TargetDetection {
        bearing,
        range: (range + range_noise).max(1e-3),
        confidence: 1.0,
        timestamp: truth.time,
    })
}
