//! Library side of the `backflow` command: scenario files, sweeps,
//! validation and file output. All physics lives in `backflow_core`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;
pub mod validate;

pub use error::CliError;
pub use scenario::Scenario;
