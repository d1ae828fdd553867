//! Desk-scale task presets wiring models, simulators and scores together.

pub mod completion;
pub mod grasp;
pub mod ik;
pub mod toy;
