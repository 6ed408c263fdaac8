//! Replication harness, file formats and configuration for the `nsi`
//! command line. The estimators themselves live in [`nsi_core`].

pub mod app;
pub mod config;
mod error;
pub mod harness;
pub mod io;
pub mod screen;
pub mod table;

pub use error::{Error, Result};
