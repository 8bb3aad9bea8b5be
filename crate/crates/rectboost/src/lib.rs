//! File formats, cross-validation, benchmarks and the command-line front end
//! for [`rectboost_core`].

pub mod bench;
pub mod cli;
pub mod cv;
pub mod error;
pub mod io;
pub mod model_file;
pub mod stats;

pub use error::{Error, Result};
pub use rectboost_core as core;
