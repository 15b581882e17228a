//! File formats, parallel drivers and the `dmimo` command line for
//! [`dmimo_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod policy;
pub mod runner;
pub mod sweep;

pub use config::ScenarioFile;
pub use error::{Result, SimError};
pub use runner::{RunOptions, Runner};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
