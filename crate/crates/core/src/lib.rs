//! Simulation and exact analysis of polarized opinion networks modeled as
//! interacting marked point processes with memory of variable length.

pub mod cli;
pub mod engine;
pub mod experiments;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod stats;
