use nalgebra::{DMatrix, DVector, Vector6};
use serde::Serialize;

use crate::dynamics::{ThrustVector, Wrench};
use crate::vehicle::VehicleConfig;

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Thruster geometry matrix with its pseudo-inverse.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationMatrix {
    /// 6×n: rows are force x, y, z then torque x, y, z.
    pub b: DMatrix<f64>,
    /// n×6.
    pub pseudo_inverse: DMatrix<f64>,
    pub rank: usize,
    pub thruster_ids: Vec<String>,
}

impl AllocationMatrix {
    pub fn thruster_count(&self) -> usize {
        self.b.ncols()
    }

    /// Wrench produced by a thrust vector under this geometry.
    pub fn wrench(&self, thrusts: &[f64]) -> Wrench {
        let u = DVector::from_column_slice(thrusts);
        let w = &self.b * u;
        Wrench::from_vector(&Vector6::from_column_slice(w.as_slice()))
    }
}

/// Per-thruster saturation magnitudes, N.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThrustLimits {
    pub forward: Vec<f64>,
    pub reverse: Vec<f64>,
}

impl ThrustLimits {
    pub fn from_config(config: &VehicleConfig) -> Self {
        ThrustLimits {
            forward: config.thrusters.iter().map(|t| t.max_thrust_fwd).collect(),
            reverse: config.thrusters.iter().map(|t| t.max_thrust_rev).collect(),
        }
    }

    pub fn limit_for(&self, i: usize, thrust: f64) -> f64 {
        if thrust >= 0.0 {
            self.forward[i]
        } else {
            self.reverse[i]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub thrusts: ThrustVector,
    /// Uniform saturation factor in (0, 1]; 1 when nothing saturated.
    pub scale: f64,
    /// Component of the desired wrench the geometry cannot produce.
    pub residual: Wrench,
}

impl Allocation {
    pub fn saturated(&self) -> bool {
        self.scale < 1.0
    }
}

pub fn build_allocation(config: &VehicleConfig) -> AllocationMatrix {
    let cog = config.body.cog();
    let n = config.thrusters.len();
    let mut b = DMatrix::zeros(6, n);
    for (j, t) in config.thrusters.iter().enumerate() {
        let arm = (t.position - cog).cross(&t.direction);
        for r in 0..3 {
            b[(r, j)] = t.direction[r];
            b[(r + 3, j)] = arm[r];
        }
    }
    let (pseudo_inverse, rank) = pseudo_inverse(&b);
    AllocationMatrix {
        b,
        pseudo_inverse,
        rank,
        thruster_ids: config.thrusters.iter().map(|t| t.id.clone()).collect(),
    }
}

fn pseudo_inverse(b: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let svd = b.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = RANK_TOLERANCE * sigma_max;
    let mut pinv = DMatrix::zeros(b.ncols(), b.nrows());
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            pinv += v_t.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    (pinv, rank)
}

/// Minimum-norm least-squares allocation with direction-preserving saturation.
pub fn allocate(a: &AllocationMatrix, desired: &Wrench, limits: &ThrustLimits) -> Allocation {
    let tau = DVector::from_column_slice(desired.to_vector().as_slice());
    let u = &a.pseudo_inverse * &tau;
    let reached = &a.b * &u;
    let residual = Wrench::from_vector(&Vector6::from_column_slice((&tau - reached).as_slice()));

    let mut scale = 1.0;
    let mut worst = None;
    for (i, &ui) in u.iter().enumerate() {
        let limit = limits.limit_for(i, ui);
        if ui.abs() > limit {
            let s = limit / ui.abs();
            if s < scale {
                scale = s;
                worst = Some(i);
            }
        }
    }
    let mut thrusts: Vec<f64> = u.iter().map(|ui| ui * scale).collect();
    for (i, t) in thrusts.iter_mut().enumerate() {
        let limit = limits.limit_for(i, *t);
        // Binding thrusters land on their limit exactly rather than a rounding hair off.
        if worst.is_some() && (t.abs() - limit).abs() <= 1e-12 * limit {
            *t = limit.copysign(*t);
        }
        *t = t.clamp(-limit, limit);
    }
    Allocation { thrusts: ThrustVector(thrusts), scale, residual }
}
