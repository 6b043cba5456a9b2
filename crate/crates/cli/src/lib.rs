//! Stance-detection pipeline orchestration, configuration and artifact bundles.

pub mod artifact;
pub mod bundle;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

pub use bundle::Bundle;
pub use config::PipelineConfig;
pub use error::{CliError, Code, Result, Stage};
pub use report::Report;
