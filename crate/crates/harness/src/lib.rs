//! Experiment driver for the emitter-waveguide model: INI configs, figure
//! data, analytic-versus-lattice comparisons and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod csv;
pub mod error;
pub mod experiments;
pub mod report;
pub mod scenarios;

pub use config::{ExperimentConfig, Kind};
pub use error::{HarnessError, Result};
pub use experiments::{run_experiment, Artifacts};
