//! File formats, configuration and the command-line driver around
//! `netresp-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod dataset_io;
pub mod draws_io;
pub mod error;
pub mod output;

pub use error::{CliError, Result};
