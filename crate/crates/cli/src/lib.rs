//! Experiment configs, figure presets, CSV/plot emission, and the command
//! implementations behind the `gdlab` binary.

pub mod config;
pub mod plot;
pub mod presets;
pub mod runner;
