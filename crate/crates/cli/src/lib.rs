//! Command-line pipeline and HTTP service around `reqrank-core`.

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod feedback;
pub mod pipeline;
pub mod roster;
pub mod service;

pub use cli::{run, Cli};
pub use config::PipelineConfig;
pub use error::CliError;
