//! Simulation and control stack for a small reconfigurable AUV.
//!
//! The crate is organised bottom-up: [`vehicle`] holds the physical
//! description, [`dynamics`] integrates it, [`control`] and [`sensors`] close
//! the loop, [`bus`] moves messages between parts, [`behaviors`] implements the
//! mission layer and [`runner`] ties everything into scenarios, logs and the
//! console gateway.

pub mod behaviors;
pub mod bus;
pub mod control;
pub mod dynamics;
pub mod geometry;
pub mod runner;
pub mod sensors;
pub mod vehicle;
