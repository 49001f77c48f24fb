//! Browser demo over `meco-core`: thrust allocation for the reference layout,
//! HREye ring rendering and a closed-loop depth step.
//!
//! Each operation is a plain Rust function plus a `#[wasm_bindgen]` wrapper
//! that takes numbers and strings and returns JSON text for `www/main.js`.

use meco_core::behaviors::hreye_render;
use meco_core::control::{allocate, build_allocation, ThrustLimits};
use meco_core::dynamics::Wrench;
use meco_core::geometry::Vec3;
use meco_core::runner::{default_menu, Scenario, Simulation};
use meco_core::vehicle::{apply_patch, ConfigPatch, VehicleConfig};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Longest depth step the page may request, s of simulated time.
pub const MAX_STEP_DURATION: f64 = 120.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationView {
    pub ids: Vec<String>,
    pub thrusts: Vec<f64>,
    pub scale: f64,
    pub rank: usize,
    /// `[fx, fy, fz, tx, ty, tz]` the layout cannot produce.
    pub residual: [f64; 6],
}

/// Allocates `wrench` (`[fx, fy, fz, tx, ty, tz]`, body frame) on the reference
/// vehicle with the thrusters in `disabled` removed.
pub fn allocation(wrench: [f64; 6], disabled: &[&str]) -> Result<AllocationView, String> {
    let mut config = VehicleConfig::reference();
    for id in disabled.iter().filter(|id| !id.is_empty()) {
        config = apply_patch(&config, &ConfigPatch::remove_thruster(id)).map_err(|e| e.to_string())?;
    }
    let a = build_allocation(&config);
    let desired = Wrench {
        force: Vec3::new(wrench[0], wrench[1], wrench[2]),
        torque: Vec3::new(wrench[3], wrench[4], wrench[5]),
    };
    let out = allocate(&a, &desired, &ThrustLimits::from_config(&config));
    let r = out.residual.to_vector();
    Ok(AllocationView {
        ids: a.thruster_ids.clone(),
        thrusts: out.thrusts.0.clone(),
        scale: out.scale,
        rank: a.rank,
        residual: [r[0], r[1], r[2], r[3], r[4], r[5]],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepResponse {
    pub time: Vec<f64>,
    pub depth: Vec<f64>,
    /// Sum of commanded thrust magnitudes, N.
    pub effort: Vec<f64>,
}

/// Depth-hold step from 1 m to `target` m in water of `density` kg/m³,
/// sampled at 10 Hz.
pub fn depth_step(target: f64, density: f64, duration: f64, seed: u64) -> Result<StepResponse, String> {
    if !(duration > 0.0 && duration <= MAX_STEP_DURATION) {
        return Err(format!("duration must be in (0, {MAX_STEP_DURATION}] s"));
    }
    let doc = json!({
        "name": "web_depth_step",
        "initial_state": {"position": [0.0, 0.0, 1.0]},
        "environment": {"water_density": density},
        "autopilot": {"mode": "depth_hold", "setpoints": {"depth": target}},
        "armed": true,
        "duration": duration,
        "seed": seed,
    });
    let loaded = Scenario::from_json(&doc.to_string())
        .and_then(|s| s.finish(VehicleConfig::reference(), default_menu()))
        .map_err(|e| e.to_string())?;
    let mut sim = Simulation::new(loaded);
    let every = ((0.1 / sim.scenario().dt).round() as u64).max(1);
    let mut out = StepResponse { time: vec![sim.time()], depth: vec![sim.depth()], effort: vec![0.0] };
    while !sim.is_finished() {
        sim.tick().map_err(|e| e.to_string())?;
        sim.drain().for_each(drop);
        if sim.ticks() % every == 0 {
            out.time.push(sim.time());
            out.depth.push(sim.depth());
            out.effort.push(sim.command().0.iter().map(|u| u.abs()).sum());
        }
    }
    Ok(out)
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// `disabled` is a comma-separated list of thruster ids.
#[wasm_bindgen(js_name = allocate)]
pub fn allocate_js(fx: f64, fy: f64, fz: f64, tx: f64, ty: f64, tz: f64, disabled: &str) -> Result<String, JsError> {
    let ids: Vec<&str> = disabled.split(',').map(str::trim).collect();
    to_json(allocation([fx, fy, fz, tx, ty, tz], &ids))
}

#[wasm_bindgen(js_name = hreye)]
pub fn hreye_js(pattern: &str, t: f64) -> Result<String, JsError> {
    to_json(Ok(hreye_render(pattern, t)))
}

#[wasm_bindgen(js_name = depthStep)]
pub fn depth_step_js(target: f64, density: f64, duration: f64, seed: u32) -> Result<String, JsError> {
    to_json(depth_step(target, density, duration, seed as u64))
}

#[wasm_bindgen(js_name = thrusterIds)]
pub fn thruster_ids_js() -> String {
    let ids: Vec<String> = VehicleConfig::reference().thrusters.into_iter().map(|t| t.id).collect();
    serde_json::to_string(&ids).unwrap_or_default()
}
