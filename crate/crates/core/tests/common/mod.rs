//! Oracles and fixtures shared by the integration tests.
//!
//! The oracles here are deliberately written without the library's own
//! numerics: plain arrays, hand-rolled elimination and quaternion products.

#![allow(dead_code)]

use std::path::PathBuf;

use sha2::{Digest, Sha256};

pub fn asset(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets").join(rel)
}

pub fn scenario(name: &str) -> PathBuf {
    asset("scenarios").join(name)
}

pub fn sha256_file(path: &std::path::Path) -> String {
    let bytes = std::fs::read(path).unwrap();
    format!("{:x}", Sha256::digest(&bytes))
}

/// Solves the square system `m x = rhs` by Gaussian elimination with partial
/// pivoting. Returns `None` for a numerically singular matrix.
pub fn solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / m[row][row];
    }
    Some(x)
}

/// 6×n thruster geometry built directly from positions and directions,
/// with moments about `cog`.
pub fn geometry(config: &meco_core::vehicle::VehicleConfig) -> Vec<[f64; 6]> {
    let c = config.body.cog();
    config
        .thrusters
        .iter()
        .map(|t| {
            let (d, p) = (t.direction, t.position - c);
            [d.x, d.y, d.z, p.y * d.z - p.z * d.y, p.z * d.x - p.x * d.z, p.x * d.y - p.y * d.x]
        })
        .collect()
}

/// Least-squares thrusts for a full-column-rank geometry via the normal
/// equations `(BᵀB) u = Bᵀ τ`.
pub fn least_squares(columns: &[[f64; 6]], tau: &[f64; 6]) -> Option<Vec<f64>> {
    let n = columns.len();
    let gram = (0..n)
        .map(|i| (0..n).map(|j| (0..6).map(|r| columns[i][r] * columns[j][r]).sum()).collect())
        .collect();
    let rhs = (0..n).map(|i| (0..6).map(|r| columns[i][r] * tau[r]).sum()).collect();
    solve(gram, rhs)
}

pub fn apply_geometry(columns: &[[f64; 6]], u: &[f64]) -> [f64; 6] {
    let mut w = [0.0; 6];
    for (col, ui) in columns.iter().zip(u) {
        for r in 0..6 {
            w[r] += col[r] * ui;
        }
    }
    w
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Hamilton product of `[w, x, y, z]` quaternions.
pub fn qmul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

pub fn qconj(q: [f64; 4]) -> [f64; 4] {
    [q[0], -q[1], -q[2], -q[3]]
}

/// Distance between unit quaternions, insensitive to the double cover.
pub fn qdist(a: [f64; 4], b: [f64; 4]) -> f64 {
    let d = |s: f64| (0..4).map(|i| (a[i] - s * b[i]).powi(2)).sum::<f64>().sqrt();
    d(1.0).min(d(-1.0))
}

pub fn wxyz(q: &meco_core::geometry::Quat) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

/// Steady speed where a constant force balances `lin·v + quad·v²`.
pub fn terminal_speed(force: f64, lin: f64, quad: f64) -> f64 {
    if quad == 0.0 {
        force / lin
    } else {
        (-lin + (lin * lin + 4.0 * quad * force).sqrt()) / (2.0 * quad)
    }
}

/// Hours to drain `capacity_wh` at constant `amps` and `volts`.
pub fn endurance_hours(capacity_wh: f64, volts: f64, amps: f64) -> f64 {
    capacity_wh / (volts * amps)
}
