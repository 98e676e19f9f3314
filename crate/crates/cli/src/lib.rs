//! Run orchestration for the econprobe elicitation harness: configuration,
//! the sampling/fitting pipeline, artifact persistence, and reporting.

pub mod config;
pub mod report;
pub mod run;
pub mod store;
pub mod validate;
