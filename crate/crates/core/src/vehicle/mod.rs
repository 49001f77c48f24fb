//! Physical description of the vehicle and its environment.
//!
//! A [`VehicleConfig`] is an immutable value: it is loaded from a JSON
//! document, validated, and given its derived quantities (composite centre of
//! gravity, total mass, resolved inertia and added mass). Runtime
//! reconfiguration goes through [`apply_patch`], which produces a new value.

mod patch;

pub use patch::{apply_patch, apply_sets, ConfigPatch, SetOp, ThrusterInsert};

use nalgebra::{Matrix3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::ControlConfig;
use crate::geometry::Vec3;
use crate::sensors::SensorsConfig;

pub const FRESHWATER_DENSITY: f64 = 1000.0;
pub const SEAWATER_DENSITY: f64 = 1025.0;
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Reference vehicle document shipped with the repository.
pub const REFERENCE_CONFIG_JSON: &str =
    include_str!("../../../../assets/vehicles/meco_reference.json");

const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid {path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("unknown path `{0}`")]
    UnknownPath(String),
    #[error("unknown thruster `{0}`")]
    UnknownThruster(String),
}

impl ConfigError {
    pub fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid { path: path.into(), reason: reason.into() }
    }

    /// Document path of the offending field, when there is one.
    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { path, .. } => Some(path),
            ConfigError::UnknownPath(p) => Some(p),
            _ => None,
        }
    }
}

pub(crate) fn ensure(cond: bool, path: impl Into<String>, reason: &str) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::invalid(path, reason))
    }
}

pub(crate) fn ensure_finite_vec(v: &Vec3, path: impl Into<String>) -> Result<(), ConfigError> {
    ensure(v.iter().all(|c| c.is_finite()), path, "components must be finite")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThrusterSpec {
    pub id: String,
    /// Body frame, metres from the geometric reference point.
    pub position: Vec3,
    /// Unit vector of positive thrust, body frame.
    pub direction: Vec3,
    pub max_thrust_fwd: f64,
    pub max_thrust_rev: f64,
    pub pwm_neutral: f64,
    pub pwm_min: f64,
    pub pwm_max: f64,
    /// Commands with |thrust| at or below this map to the neutral pulse.
    #[serde(default = "default_deadband")]
    pub deadband: f64,
}

fn default_deadband() -> f64 {
    0.2
}

impl ThrusterSpec {
    fn validate(&self, path: &str) -> Result<(), ConfigError> {
        ensure(!self.id.is_empty(), format!("{path}.id"), "must be non-empty")?;
        ensure_finite_vec(&self.position, format!("{path}.position"))?;
        ensure_finite_vec(&self.direction, format!("{path}.direction"))?;
        ensure(
            (self.direction.norm() - 1.0).abs() <= UNIT_TOLERANCE,
            format!("{path}.direction"),
            "must be a unit vector",
        )?;
        ensure(self.max_thrust_fwd > 0.0, format!("{path}.max_thrust_fwd"), "must be positive")?;
        ensure(self.max_thrust_rev > 0.0, format!("{path}.max_thrust_rev"), "must be positive")?;
        ensure(
            self.pwm_min < self.pwm_neutral && self.pwm_neutral < self.pwm_max,
            format!("{path}.pwm_neutral"),
            "requires pwm_min < pwm_neutral < pwm_max",
        )?;
        ensure(
            self.deadband >= 0.0 && self.deadband < self.max_thrust_fwd.min(self.max_thrust_rev),
            format!("{path}.deadband"),
            "must be non-negative and below both thrust limits",
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ballast {
    pub mass: f64,
    pub position: Vec3,
}

/// Quantities computed from the serialized body parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DerivedBody {
    pub cog: Vec3,
    pub total_mass: f64,
    pub inertia: Matrix3<f64>,
    pub added_mass: Vector6<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidBodyParams {
    /// Hull mass without ballast, kg.
    pub dry_mass: f64,
    /// Centre of gravity of the dry hull.
    #[serde(default = "Vec3::zeros")]
    pub hull_cog: Vec3,
    #[serde(default)]
    pub ballast: Vec<Ballast>,
    pub cob: Vec3,
    /// Displaced volume when fully submerged, m³.
    pub buoyant_volume: f64,
    /// Outer envelope (length, width, height), m.
    pub dimensions: Vec3,
    /// Row-major inertia about the centre of gravity; cuboid estimate when absent.
    #[serde(default)]
    pub inertia: Option<[[f64; 3]; 3]>,
    /// Diagonal added mass (surge, sway, heave, roll, pitch, yaw).
    #[serde(default)]
    pub added_mass: Option<Vector6<f64>>,
    pub linear_drag: Vector6<f64>,
    pub quadratic_drag: Vector6<f64>,
    #[serde(skip)]
    derived: DerivedBody,
}

impl RigidBodyParams {
    pub fn cog(&self) -> Vec3 {
        self.derived.cog
    }

    pub fn total_mass(&self) -> f64 {
        self.derived.total_mass
    }

    pub fn inertia_matrix(&self) -> Matrix3<f64> {
        self.derived.inertia
    }

    pub fn added_mass_diagonal(&self) -> Vector6<f64> {
        self.derived.added_mass
    }

    pub fn derived(&self) -> &DerivedBody {
        &self.derived
    }

    /// Rigid plus added mass along the six body axes.
    pub fn mass_diagonal(&self) -> Vector6<f64> {
        let m = self.derived.total_mass;
        let i = self.derived.inertia;
        Vector6::new(m, m, m, i[(0, 0)], i[(1, 1)], i[(2, 2)]) + self.derived.added_mass
    }

    fn validate(&self) -> Result<(), ConfigError> {
        ensure(
            self.dry_mass.is_finite() && self.dry_mass > 0.0,
            "body.dry_mass",
            "must be positive",
        )?;
        ensure_finite_vec(&self.hull_cog, "body.hull_cog")?;
        for (i, b) in self.ballast.iter().enumerate() {
            ensure(
                b.mass.is_finite() && b.mass >= 0.0,
                format!("body.ballast[{i}].mass"),
                "must be non-negative",
            )?;
            ensure_finite_vec(&b.position, format!("body.ballast[{i}].position"))?;
        }
        ensure_finite_vec(&self.cob, "body.cob")?;
        ensure(
            self.buoyant_volume.is_finite() && self.buoyant_volume > 0.0,
            "body.buoyant_volume",
            "must be positive",
        )?;
        ensure(
            self.dimensions.iter().all(|d| d.is_finite() && *d > 0.0),
            "body.dimensions",
            "all extents must be positive",
        )?;
        if let Some(rows) = &self.inertia {
            let m = matrix_from_rows(rows);
            ensure(m.iter().all(|c| c.is_finite()), "body.inertia", "entries must be finite")?;
            ensure((m - m.transpose()).amax() <= 1e-9, "body.inertia", "must be symmetric")?;
            ensure(m.cholesky().is_some(), "body.inertia", "must be positive-definite")?;
        }
        if let Some(a) = &self.added_mass {
            ensure(
                a.iter().all(|c| c.is_finite() && *c >= 0.0),
                "body.added_mass",
                "entries must be non-negative",
            )?;
        }
        ensure(
            self.linear_drag.iter().all(|c| c.is_finite() && *c >= 0.0),
            "body.linear_drag",
            "coefficients must be non-negative",
        )?;
        ensure(
            self.quadratic_drag.iter().all(|c| c.is_finite() && *c >= 0.0),
            "body.quadratic_drag",
            "coefficients must be non-negative",
        )
    }

    fn refresh(&mut self) {
        let cog = derive_cog(self);
        let total_mass = self.dry_mass + self.ballast.iter().map(|b| b.mass).sum::<f64>();
        let inertia = match &self.inertia {
            Some(rows) => matrix_from_rows(rows),
            None => cuboid_inertia(total_mass, &self.dimensions),
        };
        let added_mass = self.added_mass.unwrap_or_else(|| {
            Vector6::new(
                0.2 * total_mass,
                0.2 * total_mass,
                0.2 * total_mass,
                0.1 * inertia[(0, 0)],
                0.1 * inertia[(1, 1)],
                0.1 * inertia[(2, 2)],
            )
        });
        self.derived = DerivedBody { cog, total_mass, inertia, added_mass };
    }
}

fn matrix_from_rows(rows: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| rows[r][c])
}

/// Solid-cuboid inertia for an envelope of (length, width, height).
pub fn cuboid_inertia(mass: f64, dims: &Vec3) -> Matrix3<f64> {
    let (a, b, c) = (dims.x, dims.y, dims.z);
    Matrix3::from_diagonal(&nalgebra::Vector3::new(
        mass * (b * b + c * c) / 12.0,
        mass * (a * a + c * c) / 12.0,
        mass * (a * a + b * b) / 12.0,
    ))
}

/// Mass-weighted mean of the dry hull CoG and all ballast points.
pub fn derive_cog(body: &RigidBodyParams) -> Vec3 {
    let mut moment = body.hull_cog * body.dry_mass;
    let mut mass = body.dry_mass;
    for b in &body.ballast {
        moment += b.position * b.mass;
        mass += b.mass;
    }
    moment / mass
}

/// Mass of water displaced by `volume` at `density`, i.e. the neutrally
/// buoyant vehicle mass.
pub fn neutral_mass(volume: f64, density: f64) -> Result<f64, ConfigError> {
    ensure(volume.is_finite() && volume > 0.0, "volume", "must be positive")?;
    ensure(density.is_finite() && density > 0.0, "density", "must be positive")?;
    Ok(volume * density)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub amplitude: f64,
    pub wavelength: f64,
    pub period: f64,
    /// Propagation direction, rad from world north.
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentConfig {
    #[serde(default = "default_density")]
    pub water_density: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    /// World-frame water current, m/s.
    #[serde(default = "Vec3::zeros")]
    pub current: Vec3,
    #[serde(default)]
    pub wave: Option<WaveParams>,
    /// World z of the still-water surface.
    #[serde(default)]
    pub surface_z: f64,
}

fn default_density() -> f64 {
    FRESHWATER_DENSITY
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self::freshwater()
    }
}

impl EnvironmentConfig {
    pub fn freshwater() -> Self {
        EnvironmentConfig {
            water_density: FRESHWATER_DENSITY,
            gravity: STANDARD_GRAVITY,
            current: Vec3::zeros(),
            wave: None,
            surface_z: 0.0,
        }
    }

    pub fn seawater() -> Self {
        EnvironmentConfig { water_density: SEAWATER_DENSITY, ..Self::freshwater() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        ensure(
            self.water_density.is_finite() && self.water_density > 0.0,
            "environment.water_density",
            "must be positive",
        )?;
        ensure(
            self.gravity.is_finite() && self.gravity > 0.0,
            "environment.gravity",
            "must be positive",
        )?;
        ensure_finite_vec(&self.current, "environment.current")?;
        ensure(self.surface_z.is_finite(), "environment.surface_z", "must be finite")?;
        if let Some(w) = &self.wave {
            ensure(w.amplitude >= 0.0, "environment.wave.amplitude", "must be non-negative")?;
            ensure(w.wavelength > 0.0, "environment.wave.wavelength", "must be positive")?;
            ensure(w.period > 0.0, "environment.wave.period", "must be positive")?;
            ensure(w.heading.is_finite(), "environment.wave.heading", "must be finite")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryConfig {
    pub capacity_wh: f64,
    pub nominal_voltage: f64,
    /// Draw with thrusters stopped and no heavy compute, A.
    pub idle_current: f64,
    /// Extra draw of the main computer under heavy load, A.
    #[serde(default)]
    pub compute_current: f64,
    /// Draw of one thruster at full forward thrust, A.
    #[serde(default)]
    pub thruster_full_current: f64,
}

impl BatteryConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        ensure(self.capacity_wh > 0.0, "battery.capacity_wh", "must be positive")?;
        ensure(self.nominal_voltage > 0.0, "battery.nominal_voltage", "must be positive")?;
        ensure(self.idle_current >= 0.0, "battery.idle_current", "must be non-negative")?;
        ensure(self.compute_current >= 0.0, "battery.compute_current", "must be non-negative")?;
        ensure(
            self.thruster_full_current >= 0.0,
            "battery.thruster_full_current",
            "must be non-negative",
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleConfig {
    #[serde(default)]
    pub name: String,
    pub body: RigidBodyParams,
    pub thrusters: Vec<ThrusterSpec>,
    pub battery: BatteryConfig,
    #[serde(default)]
    pub sensors: SensorsConfig,
    #[serde(default)]
    pub control: ControlConfig,
}

impl VehicleConfig {
    /// The reference five-thruster layout in freshwater trim.
    pub fn reference() -> Self {
        load_config(REFERENCE_CONFIG_JSON).expect("shipped reference config is valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn thruster_index(&self, id: &str) -> Option<usize> {
        self.thrusters.iter().position(|t| t.id == id)
    }

    /// Checks every invariant and recomputes derived quantities.
    pub fn validated(mut self) -> Result<Self, ConfigError> {
        self.validate()?;
        self.body.refresh();
        ensure(self.body.total_mass() > 0.0, "body.ballast", "total mass must be positive")?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.body.validate()?;
        ensure(!self.thrusters.is_empty(), "thrusters", "at least one thruster is required")?;
        for (i, t) in self.thrusters.iter().enumerate() {
            t.validate(&format!("thrusters[{i}]"))?;
            if self.thrusters[..i].iter().any(|o| o.id == t.id) {
                return Err(ConfigError::invalid(format!("thrusters[{i}].id"), "duplicate id"));
            }
        }
        self.battery.validate()?;
        self.sensors.validate()?;
        self.control.validate()
    }
}

/// Parses and validates a vehicle document.
pub fn load_config(document: &str) -> Result<VehicleConfig, ConfigError> {
    let raw: VehicleConfig = serde_json::from_str(document)?;
    raw.validated()
}
