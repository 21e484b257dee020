//! Batch runner for the bistable-qubit experiments: JSON config in, CSV
//! tables plus JSON summary and manifest out.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, Experiment, RunConfig};
pub use run::run;
