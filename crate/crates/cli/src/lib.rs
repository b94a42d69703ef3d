//! Scenario runner for the qcavity library: TOML configs, named presets and
//! deterministic CSV output.

pub mod config;
pub mod output;
pub mod presets;
pub mod scenarios;

pub use config::{ConfigError, ScenarioConfig, ScenarioKind};
pub use scenarios::{run, RunError};
