//! Scenario orchestration: configs, pipeline runs, run comparison, and the
//! randomized invariant suite behind `lsl validate`.

pub mod config;

pub use config::ScenarioConfig;
