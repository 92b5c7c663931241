//! Experiment runner: configuration, scenario pipelines and reports.

pub mod config;
pub mod report;
pub mod run;
pub mod suites;

pub use config::{ExperimentConfig, Format};
pub use report::{emit_report, Check, Report};
pub use run::{run_degrees, run_gbc, run_identity_suite, run_minkowski_props};
