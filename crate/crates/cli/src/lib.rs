//! Command line and HTTP front ends for `lexloop-core`.

pub mod args;
pub mod commands;
pub mod config;
pub mod server;
