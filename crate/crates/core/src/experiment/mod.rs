//! Data generators, configuration and the driver of the experiments.

pub mod config;
pub mod data;
pub mod output;
pub mod presets;
pub mod runner;
pub mod svg;
pub mod sweep;

pub use config::{Experiment, ExperimentConfig, Filter, HindsightConfig, Hyper, OutputConfig};
pub use data::Dataset;
pub use runner::{run_experiment, run_online, RunResult};
