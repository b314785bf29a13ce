//! Configuration-driven experiments on top of the `hioco` simulator:
//! presets, sweeps, trace and report emission, and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod presets;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::CliError;
