//! Command-line front end of the V-waveguide lab: configuration, the
//! `threshold | eigs | sweep | certify` commands, and result serialization.

// Validation is written `!(x > y)` on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

pub use commands::{cmd_certify, cmd_eigs, cmd_sweep, cmd_threshold, OutputSpec, VERSION};
pub use config::RunConfig;
pub use error::CliError;
