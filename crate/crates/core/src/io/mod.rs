//! Run configuration, file formats and the command-line interface.

pub mod cli;
pub mod config;
pub mod output;
