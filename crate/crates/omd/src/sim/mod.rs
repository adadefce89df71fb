//! Monte-Carlo harness: deterministic channel generation, the round-robin
//! covariance adaptation protocol, scenario presets, and CSV summaries.

pub mod channel;
pub mod config;
pub mod protocol;
pub mod scenario;

pub use channel::draw_channels;
pub use config::{Decoder, ScenarioConfig, Sweep};
pub use protocol::{run_protocol, run_protocol_observed, RunRecord, UpdateEvent};
pub use scenario::{
    preset_config, run_scenario, run_simulation, CsvFlavor, ScenarioRow, SimOptions,
};
