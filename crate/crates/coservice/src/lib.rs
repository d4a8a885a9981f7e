//! Command-line workflows and the local HTTP service around `mrin-core`.
//!
//! The binary `mrin` wraps [`commands`]; [`server`] exposes suggest, explain
//! and session recording to the level editor.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod server;
pub mod suggest;
pub mod wire;

mod error;

pub use error::CommandError;
