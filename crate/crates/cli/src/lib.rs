//! Command-line front end: configuration, initial curves, run output,
//! trajectory checks, inequality audits and parameter sweeps.

pub mod commands;
pub mod config;
pub mod initial;
pub mod svg;

pub use commands::{cmd_audit, cmd_check, cmd_run, cmd_sweep, exit_code};
pub use config::{parse_config, Config};
