//! Scenario runner behind the `lab` binary.

pub mod config;
pub mod fit;
pub mod jobs;
pub mod report;
pub mod scenarios;

pub use config::{ConfigError, Scenario, ScenarioConfig};
pub use report::{Criterion, Report, Table};
pub use scenarios::{run_scenario, RunError};
