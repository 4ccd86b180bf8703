//! Configuration, commands and output writers behind the `tevie` binary.

pub mod commands;
pub mod config;
pub mod output;
