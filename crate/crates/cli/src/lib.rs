//! Experiment harness: IK datasets, prior training, adaptation runs,
//! evaluation reports and method comparisons.

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod report;

pub use config::{Domain, ExperimentConfig};
pub use error::{CliError, Result};
pub use experiment::{evaluate, run_experiment, RunOutput};
pub use report::{compare, Comparison, MetricsReport};
