//! Command-line front end for the backflash side-channel simulator:
//! scenario configuration files, bundled preset experiments, and the CSV
//! output pipeline. The simulation and analysis machinery lives in
//! `backflash-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod presets;

pub use error::CliError;
