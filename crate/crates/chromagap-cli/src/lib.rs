//! Pipelines and configuration behind the `chromagap` binary.

pub mod config;
pub mod pipeline;
pub mod report;

pub use config::Config;
pub use pipeline::{pipeline_thm14_machinery, pipeline_thm15, seed_instance};
pub use report::{Artifacts, PipelineReport, StageRecord};
