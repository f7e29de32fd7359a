//! Command-line tools and text formats for p-norm flow diffusion.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod io;
pub mod metrics;

pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport};
pub use metrics::{Format, MetricsRecord};
