//! File formats and the command-line workflow around `hybridloc-core`.
//!
//! * [`scenario`]: TOML scenario files.
//! * [`logs`]: CSV measurement logs, ground truth, estimates and tables.
//! * [`report`]: JSON evaluation and Monte-Carlo reports.
//! * [`commands`]: `simulate`, `localize`, `evaluate`, `fit-sensor`,
//!   `montecarlo` and `init`.

pub mod commands;
pub mod error;
pub mod logs;
pub mod report;
pub mod scenario;

pub use error::{CliError, Result};
