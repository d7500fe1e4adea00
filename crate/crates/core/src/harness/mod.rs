//! Verification harness: empirical distributions, experiments and the CLI.

pub mod cli;
pub mod config;
pub mod convergence;
pub mod stats;

pub use config::{parse_config, ExperimentConfig, ExperimentKind};
pub use convergence::{run_convergence_experiment, ConvergenceReport, ConvergenceRow};
pub use stats::{dkw_radius, ecdf, joint_ecdf, joint_survival, ks_distance, ks_test, two_sample_ks, KsTest};
