//! Command-line orchestration, configuration and reports for the `mequi` laboratory.

pub mod acceptance;
pub mod cli;
pub mod commands;
pub mod config;
pub mod report;
