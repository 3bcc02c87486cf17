//! Pipeline orchestration for the `latentform` command.

pub mod commands;
pub mod config;
