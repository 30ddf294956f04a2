//! File formats, reports, parallel sweeps and the `frele` command line on
//! top of `frele-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod data_io;
pub mod error;
pub mod pipeline;
pub mod report;

pub use error::{LabError, Result};
