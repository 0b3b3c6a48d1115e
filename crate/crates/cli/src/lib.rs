//! Driver layer for the reduction library: model file ingestion, experiment
//! configuration and execution, and report/plot-data emission.

pub mod error;
pub mod experiment;
pub mod model_io;

pub use error::{CliError, Result};
