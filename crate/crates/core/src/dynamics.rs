//! Fixed-step 6-DoF rigid-body dynamics with restoring, drag, thruster and
//! surface-wave forcing.
//!
//! Moments are taken about the current centre of gravity. Mass, added mass
//! and drag are diagonal in the body frame. The integrator is semi-implicit
//! Euler: velocities first (linear drag treated implicitly), then pose from
//! the updated velocities, then a quaternion renormalisation.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::Vector6;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{quat_wxyz, Quat, Vec3};
use crate::vehicle::{EnvironmentConfig, RigidBodyParams, VehicleConfig};

/// Largest accepted integration step, s.
pub const MAX_DT: f64 = 0.05;
pub const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("thrust vector has {got} entries, vehicle has {expected} thrusters")]
    LengthMismatch { expected: usize, got: usize },
    #[error("time step {0} s outside (0, {MAX_DT}]")]
    BadTimeStep(f64),
    #[error("state became non-finite at t = {time:.3} s")]
    NonFinite { time: f64, last: Box<BodyState> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    /// World frame (NED), m.
    pub position: Vec3,
    /// world←body.
    #[serde(with = "quat_wxyz")]
    pub orientation: Quat,
    /// Body frame, m/s.
    pub velocity: Vec3,
    /// Body frame, rad/s.
    pub angular_velocity: Vec3,
    pub time: f64,
}

impl Default for BodyState {
    fn default() -> Self {
        BodyState {
            position: Vec3::zeros(),
            orientation: Quat::identity(),
            velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
            time: 0.0,
        }
    }
}

impl BodyState {
    pub fn at(position: Vec3, orientation: Quat) -> Self {
        BodyState { position, orientation, ..Default::default() }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|c| c.is_finite())
            && self.orientation.coords.iter().all(|c| c.is_finite())
            && self.velocity.iter().all(|c| c.is_finite())
            && self.angular_velocity.iter().all(|c| c.is_finite())
            && self.time.is_finite()
    }

    pub fn twist(&self) -> Vector6<f64> {
        Vector6::new(
            self.velocity.x,
            self.velocity.y,
            self.velocity.z,
            self.angular_velocity.x,
            self.angular_velocity.y,
            self.angular_velocity.z,
        )
    }

    /// ½ νᵀ M ν with M the combined rigid + added mass diagonal.
    pub fn kinetic_energy(&self, body: &RigidBodyParams) -> f64 {
        let m = body.mass_diagonal();
        let nu = self.twist();
        0.5 * nu.component_mul(&nu).dot(&m)
    }
}

/// Body-frame force and torque (torque about the centre of gravity).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vec3,
    pub torque: Vec3,
}

impl Wrench {
    pub fn zero() -> Self {
        Wrench::default()
    }

    pub fn new(force: Vec3, torque: Vec3) -> Self {
        Wrench { force, torque }
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Wrench {
            force: Vec3::new(v[0], v[1], v[2]),
            torque: Vec3::new(v[3], v[4], v[5]),
        }
    }

    /// `[fx, fy, fz, tx, ty, tz]`
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.force.x,
            self.force.y,
            self.force.z,
            self.torque.x,
            self.torque.y,
            self.torque.z,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|c| c.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }
}

impl Add for Wrench {
    type Output = Wrench;
    fn add(self, rhs: Wrench) -> Wrench {
        Wrench { force: self.force + rhs.force, torque: self.torque + rhs.torque }
    }
}

impl AddAssign for Wrench {
    fn add_assign(&mut self, rhs: Wrench) {
        self.force += rhs.force;
        self.torque += rhs.torque;
    }
}

impl Sub for Wrench {
    type Output = Wrench;
    fn sub(self, rhs: Wrench) -> Wrench {
        Wrench { force: self.force - rhs.force, torque: self.torque - rhs.torque }
    }
}

impl Neg for Wrench {
    type Output = Wrench;
    fn neg(self) -> Wrench {
        Wrench { force: -self.force, torque: -self.torque }
    }
}

impl Mul<f64> for Wrench {
    type Output = Wrench;
    fn mul(self, k: f64) -> Wrench {
        Wrench { force: self.force * k, torque: self.torque * k }
    }
}

/// Per-thruster thrust in N, ordered like `VehicleConfig::thrusters`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThrustVector(pub Vec<f64>);

impl ThrustVector {
    pub fn zeros(n: usize) -> Self {
        ThrustVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|u| *u == 0.0)
    }
}

pub fn thruster_wrench(config: &VehicleConfig, thrusts: &ThrustVector) -> Result<Wrench, DynamicsError> {
    if thrusts.len() != config.thrusters.len() {
        return Err(DynamicsError::LengthMismatch {
            expected: config.thrusters.len(),
            got: thrusts.len(),
        });
    }
    let cog = config.body.cog();
    let mut w = Wrench::zero();
    for (spec, &u) in config.thrusters.iter().zip(&thrusts.0) {
        let f = spec.direction * u;
        w.force += f;
        w.torque += (spec.position - cog).cross(&f);
    }
    Ok(w)
}

/// Surface elevation (positive up) and orbital velocity (world NED) of the
/// single-component linear wave at a world point.
pub fn wave_kinematics(env: &EnvironmentConfig, point: &Vec3, t: f64) -> (f64, Vec3) {
    let Some(w) = &env.wave else {
        return (0.0, Vec3::zeros());
    };
    let k = std::f64::consts::TAU / w.wavelength;
    let omega = std::f64::consts::TAU / w.period;
    let (s, c) = w.heading.sin_cos();
    let phase = k * (point.x * c + point.y * s) - omega * t;
    let eta = w.amplitude * phase.sin();
    let depth = (point.z - env.surface_z).max(0.0);
    let decay = (-k * depth).exp();
    let horizontal = w.amplitude * omega * decay * phase.sin();
    // Upward orbital speed is -Aω e^{kz} cos(phase); z is down here.
    let down = w.amplitude * omega * decay * phase.cos();
    (eta, Vec3::new(horizontal * c, horizontal * s, down))
}

/// Vertical half-extent of the rotated hull bounding box.
fn half_height(state: &BodyState, body: &RigidBodyParams) -> f64 {
    let r = state.orientation.to_rotation_matrix();
    let m = r.matrix();
    0.5 * (m[(2, 0)].abs() * body.dimensions.x
        + m[(2, 1)].abs() * body.dimensions.y
        + m[(2, 2)].abs() * body.dimensions.z)
}

/// Fraction of the buoyant volume below the local water surface, using a
/// vertical slab through the hull bounding box.
pub fn submerged_fraction(state: &BodyState, body: &RigidBodyParams, env: &EnvironmentConfig) -> f64 {
    let (eta, _) = wave_kinematics(env, &state.position, state.time);
    let local_surface = env.surface_z - eta;
    let h = half_height(state, body);
    ((state.position.z + h - local_surface) / (2.0 * h)).clamp(0.0, 1.0)
}

pub fn restoring_wrench(state: &BodyState, body: &RigidBodyParams, env: &EnvironmentConfig) -> Wrench {
    let weight = body.total_mass() * env.gravity;
    let buoyancy =
        env.water_density * env.gravity * body.buoyant_volume * submerged_fraction(state, body, env);
    let to_body = state.orientation.inverse();
    let down_body = to_body * Vec3::z();
    let buoyant_force = -down_body * buoyancy;
    let force = down_body * weight + buoyant_force;
    let torque = (body.cob - body.cog()).cross(&buoyant_force);
    Wrench { force, torque }
}

/// Fluid velocity (current plus wave orbital motion) in the body frame.
fn fluid_velocity_body(state: &BodyState, env: &EnvironmentConfig) -> Vec3 {
    let (_, orbital) = wave_kinematics(env, &state.position, state.time);
    state.orientation.inverse() * (env.current + orbital)
}

pub fn drag_wrench(state: &BodyState, body: &RigidBodyParams, env: &EnvironmentConfig) -> Wrench {
    let rel = state.velocity - fluid_velocity_body(state, env);
    let nu = Vector6::new(
        rel.x,
        rel.y,
        rel.z,
        state.angular_velocity.x,
        state.angular_velocity.y,
        state.angular_velocity.z,
    );
    let lin = body.linear_drag.component_mul(&nu);
    let quad = body.quadratic_drag.component_mul(&nu.component_mul(&nu.abs()));
    Wrench::from_vector(&-(lin + quad))
}

/// Coriolis and centripetal generalised force C(ν)ν for a diagonal mass.
fn coriolis(mass: &Vector6<f64>, v: &Vec3, w: &Vec3) -> Vector6<f64> {
    let p = Vec3::new(mass[0] * v.x, mass[1] * v.y, mass[2] * v.z);
    let h = Vec3::new(mass[3] * w.x, mass[4] * w.y, mass[5] * w.z);
    let lin = w.cross(&p);
    let ang = w.cross(&h) + v.cross(&p);
    Vector6::new(lin.x, lin.y, lin.z, ang.x, ang.y, ang.z)
}

/// Advances the state by `dt` under the given thrusts.
pub fn step(
    state: &BodyState,
    config: &VehicleConfig,
    env: &EnvironmentConfig,
    thrusts: &ThrustVector,
    dt: f64,
) -> Result<BodyState, DynamicsError> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(DynamicsError::BadTimeStep(dt));
    }
    let body = &config.body;
    let mass = body.mass_diagonal();

    let fluid = fluid_velocity_body(state, env);
    let rel = state.velocity - fluid;
    let nu = state.twist();
    let nu_rel = Vector6::new(
        rel.x,
        rel.y,
        rel.z,
        nu[3],
        nu[4],
        nu[5],
    );

    let external = (thruster_wrench(config, thrusts)? + restoring_wrench(state, body, env)).to_vector();
    let quadratic = body.quadratic_drag.component_mul(&nu_rel.component_mul(&nu_rel.abs()));
    // Linear drag on the fluid part stays explicit; on the body part it is implicit.
    let fluid6 = Vector6::new(fluid.x, fluid.y, fluid.z, 0.0, 0.0, 0.0);
    let explicit = external - quadratic + body.linear_drag.component_mul(&fluid6)
        - coriolis(&mass, &state.velocity, &state.angular_velocity);

    let momentum = mass.component_mul(&nu) + explicit * dt;
    let damped_mass = mass + body.linear_drag * dt;
    let next_nu = momentum.component_div(&damped_mass);

    let velocity = Vec3::new(next_nu[0], next_nu[1], next_nu[2]);
    let angular_velocity = Vec3::new(next_nu[3], next_nu[4], next_nu[5]);
    let position = state.position + state.orientation * velocity * dt;
    let rotated = state.orientation * Quat::from_scaled_axis(angular_velocity * dt);
    let orientation = Quat::new_normalize(rotated.into_inner());

    let next = BodyState { position, orientation, velocity, angular_velocity, time: state.time + dt };
    if !next.is_finite() {
        return Err(DynamicsError::NonFinite { time: state.time, last: Box::new(*state) });
    }
    Ok(next)
}
