//! Batch runner around `evth-core`: a TOML run configuration, a per-step
//! monitor CSV, binary checkpoints and a JSON status line.

pub mod checkpoint;
pub mod config;
pub mod csv;
pub mod error;
pub mod runner;

pub use config::RunConfig;
pub use error::RunError;
pub use runner::{run, RunResult, Summary};
