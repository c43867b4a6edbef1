//! Scenario runner for the spinning-charge simulator: configuration, runs,
//! attraction diagnostics and artifact output.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod scenario;

pub use config::Scenario;
pub use error::{CliError, CliResult};
pub use report::{attraction_report, oscillation, omega_tilde, Report};
pub use scenario::{execute, run_scenario, Outcome};
