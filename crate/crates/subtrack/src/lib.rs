//! Std companion to `subtrack-core`: stream file formats, run
//! configuration and the `subtrack` experiment runner.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use config::{Mode, RunConfig, SynthKind};
pub use error::{Error, Result};
