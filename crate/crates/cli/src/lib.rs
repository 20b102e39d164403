//! Scenario runner behind the `mems` binary.

pub mod config;
pub mod output;
pub mod scenario;

pub use config::{Mode, ScenarioConfig};
pub use scenario::{run, ModeResult, Summary};
