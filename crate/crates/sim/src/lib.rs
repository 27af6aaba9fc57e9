//! Configuration, run orchestration and file formats for `vxsim-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod run;
pub mod vxf;

pub use config::{parse_config, ConfigError, Mode, SimConfig};
pub use run::{run, RunError, RunOptions, RunOutcome};
