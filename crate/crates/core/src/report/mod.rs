//! Configuration parsing, experiment commands and CSV output.

mod commands;
mod config;
mod csv;
mod manifest;

pub use commands::*;
pub use config::{parse_coherence, ConfigFile, SIM_KEYS};
pub use csv::fmt_f64;
pub use manifest::{RunManifest, MANIFEST_FILE};
