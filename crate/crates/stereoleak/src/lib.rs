//! File formats, report rendering, simulation and the command-line driver
//! around [`stereoleak_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod fixture;
pub mod pipeline;
pub mod probe_file;
pub mod registry_file;
pub mod render;
pub mod results;
pub mod simulate;
pub mod survey_file;

pub use error::{Error, Result};
pub use stereoleak_core as core;
