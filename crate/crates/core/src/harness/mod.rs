//! Configuration files, the convergence experiments, report and plot output,
//! and the command line front end.

mod cli;
pub mod config;
pub mod plot;
mod report;
pub mod selftest;
mod studies;

pub use cli::cli;
pub use config::{ExperimentConfig, InitSpec, KernelKind, KernelSpec, OmegaShape, SystemKind};
pub use report::{non_increasing, ExperimentReport};
pub use studies::{compare_runs, study_kernel, study_xi};
