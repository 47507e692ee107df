//! Library side of the experiment CLI: config schema, runner, audit
//! dispatch, and plot-data emission. The binary in `main.rs` is a thin
//! wrapper over these modules.

pub mod audits;
pub mod config;
pub mod plotdata;
pub mod runner;
