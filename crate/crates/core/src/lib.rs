//! Deterministic multi-turn environment for tool-augmented time-series
//! forecasting agents.

pub mod curriculum;
pub mod data;
pub mod eval;
pub mod fixtures;
pub mod memory;
pub mod models;
pub mod orchestrator;
pub mod reward;
pub mod serve;
pub mod stats;
pub mod stub;
pub mod toolkit;
