//! Frame conventions and small geometry helpers shared across modules.
//!
//! Body frame: x forward (surge), y starboard (sway), z down (heave).
//! World frame: north-east-down. Orientations are stored as unit quaternions
//! rotating body-frame vectors into the world frame.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Quat = UnitQuaternion<f64>;

/// Roll, pitch, yaw (rad) of a world←body rotation.
pub fn euler(q: &Quat) -> (f64, f64, f64) {
    q.euler_angles()
}

pub fn from_euler(roll: f64, pitch: f64, yaw: f64) -> Quat {
    UnitQuaternion::from_euler_angles(roll, pitch, yaw)
}

/// Smallest rotation angle between two orientations (sign-insensitive).
pub fn angle_between(a: &Quat, b: &Quat) -> f64 {
    a.angle_to(b)
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut x = a % two_pi;
    if x <= -std::f64::consts::PI {
        x += two_pi;
    } else if x > std::f64::consts::PI {
        x -= two_pi;
    }
    x
}

/// Serde adapter storing a unit quaternion as `[w, x, y, z]`.
///
/// Deserialization rejects quaternions whose norm is off by more than 1e-9;
/// the stored components are kept bit-for-bit so documents round-trip.
pub mod quat_wxyz {
    use super::*;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub const NORM_TOLERANCE: f64 = 1e-9;

    pub fn serialize<S: Serializer>(q: &Quat, s: S) -> Result<S::Ok, S::Error> {
        let q = q.quaternion();
        s.collect_seq([q.w, q.i, q.j, q.k])
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Quat, D::Error> {
        let [w, x, y, z] = <[f64; 4]>::deserialize(d)?;
        let raw = Quaternion::new(w, x, y, z);
        let norm = raw.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(D::Error::custom(format!(
                "quaternion [w, x, y, z] must have unit norm, got {norm}"
            )));
        }
        Ok(UnitQuaternion::new_unchecked(raw))
    }
}

/// [`quat_wxyz`] for optional fields; `null` maps to `None`.
pub mod quat_wxyz_opt {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Option<Quat>, s: S) -> Result<S::Ok, S::Error> {
        match q {
            Some(q) => quat_wxyz::serialize(q, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Quat>, D::Error> {
        #[derive(Deserialize)]
        struct Wrapped(#[serde(with = "quat_wxyz")] Quat);
        Ok(Option::<Wrapped>::deserialize(d)?.map(|w| w.0))
    }
}
