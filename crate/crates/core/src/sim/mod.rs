//! Epoch-driven WBAN simulation.

pub mod engine;
pub mod scenario;
pub mod summary;

pub use engine::{
    first_epoch_state, greedy_baseline_decision, run, EpochFlow, EpochReport, InvariantLog, RunOutput,
};
pub use scenario::{default_sensor_table, LinkParams, LmuParams, Mode, Scenario, SensorSpec};
pub use summary::{gain_pct, improvement, reduction_pct, run_batch, summarize, Improvement, Summary};
